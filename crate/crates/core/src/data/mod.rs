//! Panel ingestion and validation, public-source downloads, weekly panel
//! assembly, and the synthetic panel generator.

mod panel;
mod panel_csv;
mod sources;
mod states;
mod synthetic;
mod weekly;

pub use panel::{PanelDataset, DEFAULT_PREDICTORS};
pub use panel_csv::{load_panel_csv, read_panel_csv, save_panel_csv, write_panel_csv};
pub use sources::{
    fetch_public_sources, read_manifest, sha256_hex, source, verify_cached, FetchedSources, HttpTransport,
    ProvenanceRecord, Source, Transport, MANIFEST_FILE, SOURCES,
};
pub use states::{unit_code, US_STATES};
pub use synthetic::{generate_synthetic, SyntheticConfig, SyntheticTruth};
pub use weekly::{
    build_weekly_panel, panel_week, parse_indices, parse_jhu_confirmed, parse_oxcgrt, parse_population,
    DailySeries, IndexTable, WeeklyInputs, PANEL_YEAR,
};

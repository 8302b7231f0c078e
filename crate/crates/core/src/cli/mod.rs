//! File formats, configuration and the command implementations behind the
//! `sentilab` binary.

mod commands;
mod config;
mod report;

pub use commands::{
    adam_from_checkpoint, cmd_ablate, cmd_eval, cmd_predict, cmd_stats, cmd_train, load_records, load_resources, load_run, save_run,
    AblationResult, LoadedRun, CHECKPOINT_FILE, FEATURES_FILE, HISTORY_FILE, MANIFEST_FILE, VOCAB_FILE,
};
pub use config::{ConfigError, RunConfig};
pub use report::{ablation_csv, ablation_text, eval_table_text, metrics_csv, AblationRow, LabelStats};

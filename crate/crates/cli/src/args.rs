use std::num::NonZeroUsize;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "modmig", version, about = "Plan and generate a C++ modules migration")]
pub struct Cli {
    /// Library manifest (JSON).
    #[arg(long, global = true, value_name = "FILE")]
    pub manifest: Option<PathBuf>,

    /// Directory receiving all artifacts; created if missing.
    #[arg(long, global = true, value_name = "DIR", default_value = "modmig-out")]
    pub out: PathBuf,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    /// Parallel workers for scanning and compile checks [default: CPU count].
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<NonZeroUsize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the include graph and write graph.json.
    Scan(AnalysisArgs),
    /// Classify interface headers and write headers.json.
    Check(CheckArgs),
    /// Generate module.modulemap and omitted.json.
    Genmap(GenmapArgs),
    /// Write a virtual filesystem overlay (overlay.json).
    Overlay(OverlayArgs),
    /// Compute the migration order and duplication costs (plan.json).
    Plan(PlanArgs),
}

#[derive(Debug, Clone, Args)]
pub struct AnalysisArgs {
    /// Ignore includes inside #if/#ifdef regions.
    #[arg(long)]
    pub ignore_conditional_includes: bool,

    /// Restrict the run to these libraries (comma separated).
    #[arg(long, value_name = "LIBS", value_delimiter = ',')]
    pub only_libs: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct CheckOptions {
    /// Standalone compile command; `{header}` is replaced by the header
    /// path and `{out}` by a scratch output file.
    #[arg(long, value_name = "TEMPLATE", env = "MODMIG_CHECK_CMD")]
    pub check_cmd: Option<String>,

    /// Skip standalone compiles; headers are classified from the graph only.
    #[arg(long, conflicts_with = "check_cmd")]
    pub no_compile_checks: bool,

    /// Regex extracting missing include names from compiler output.
    #[arg(long, value_name = "REGEX")]
    pub missing_include_pattern: Option<String>,

    /// Recompute classifications even when headers.json is current.
    #[arg(long)]
    pub no_cache: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    #[command(flatten)]
    pub checks: CheckOptions,
}

#[derive(Debug, Clone, Args)]
pub struct GenmapArgs {
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    #[command(flatten)]
    pub checks: CheckOptions,
    /// Appended to every sanitized library name.
    #[arg(long, default_value = modmig_core::modulemap::DEFAULT_SUFFIX)]
    pub suffix: String,
}

#[derive(Debug, Clone, Args)]
pub struct OverlayArgs {
    /// VIRTUAL_FILE=PHYSICAL_FILE, both absolute. Repeatable.
    #[arg(long = "mount", value_name = "VIRT=PHYS", required = true)]
    pub mounts: Vec<String>,

    /// OLD_PREFIX=NEW_PREFIX applied to the written document. Repeatable.
    #[arg(long = "relocate", value_name = "OLD=NEW")]
    pub relocations: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    #[command(flatten)]
    pub checks: CheckOptions,
    #[arg(long, default_value = modmig_core::modulemap::DEFAULT_SUFFIX)]
    pub suffix: String,
    /// Module assignment: a modulemap, or JSON `{"modules": {header: module}}`.
    /// Defaults to the generated modulemap.
    #[arg(long, value_name = "FILE")]
    pub assignment: Option<PathBuf>,
}

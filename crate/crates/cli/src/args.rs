use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cvhmm::align::Alignment;
use cvhmm::config::{ConfigOverrides, Mode};

#[derive(Debug, Parser)]
#[command(name = "cvhmm", version, about = "Change-vector hidden Markov models for panel and scan data")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// TOML configuration file; flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Number of change-states.
    #[arg(long, global = true)]
    pub k: Option<usize>,

    #[arg(long, global = true, value_enum)]
    pub mode: Option<ModeArg>,

    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Fmri,
    Questionnaire,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Fmri => Mode::Fmri,
            ModeArg::Questionnaire => Mode::Questionnaire,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AlignmentArg {
    TFrom,
    TTo,
}

impl From<AlignmentArg> for Alignment {
    fn from(a: AlignmentArg) -> Self {
        match a {
            AlignmentArg::TFrom => Alignment::TFrom,
            AlignmentArg::TTo => Alignment::TTo,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score a raw questionnaire CSV into a panel CSV.
    Score {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "scored.csv")]
        output: PathBuf,
    },
    /// Fit the change-state model.
    Fit {
        /// Scored panel CSV (questionnaire) or scan manifest CSV (fmri).
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        stratum: Option<String>,
        #[arg(long, default_value = "model.json")]
        output: PathBuf,
    },
    /// Decode hidden-state sequences under a fitted model.
    Decode {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Decoder name; repeat to write several into one file.
        #[arg(long = "method", default_value = "viterbi")]
        methods: Vec<String>,
        #[arg(long)]
        stratum: Option<String>,
        #[arg(long, default_value = "sequences.csv")]
        output: PathBuf,
    },
    /// Map states to conditions by majority vote and write condition curves.
    Align {
        #[arg(long)]
        sequences: PathBuf,
        #[arg(long)]
        design: PathBuf,
        /// Scan manifest; adds the raw ROI curve.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        stratum: Option<String>,
        #[arg(long, value_enum)]
        alignment: Option<AlignmentArg>,
        #[arg(long)]
        lag: Option<usize>,
        #[arg(long, default_value = "curves.csv")]
        output: PathBuf,
        #[arg(long, default_value = "state_map.json")]
        map_output: PathBuf,
    },
    #[command(subcommand)]
    Stats(StatsCommand),
    #[command(subcommand)]
    Synth(SynthCommand),
}

#[derive(Debug, Subcommand)]
pub enum StatsCommand {
    /// Cohen's d between faces and shapes frames of each curve.
    EffectSize {
        #[arg(long)]
        curves: PathBuf,
        /// Label written to the `stratum` column.
        #[arg(long)]
        stratum: Option<String>,
        #[arg(long, default_value = "effect_sizes.csv")]
        output: PathBuf,
    },
    /// Chi-squared comparison of two groups' transition tables.
    Transitions {
        #[arg(long)]
        sequences: PathBuf,
        #[arg(long)]
        groups: PathBuf,
        /// Name of the grouping variable, for the report.
        #[arg(long, default_value = "group")]
        grouping: String,
        #[arg(long, default_value = "transitions.json")]
        output: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Scans (scan mode) or entities per group (cohort mode).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    #[arg(long)]
    pub separation: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum SynthCommand {
    /// Block-design scans with a scan manifest and design file.
    Scans {
        #[command(flatten)]
        common: SynthArgs,
        #[arg(long)]
        signal_amplitude: Option<f64>,
        #[arg(long)]
        block_len: Option<usize>,
        #[arg(long)]
        n_cycles: Option<usize>,
        #[arg(long, default_value = "synthetic")]
        stratum: String,
    },
    /// Two-group questionnaire-style cohort.
    Cohort {
        #[command(flatten)]
        common: SynthArgs,
        #[arg(long)]
        timepoints: Option<usize>,
        /// Give both groups the same transition matrix.
        #[arg(long)]
        null: bool,
    },
}

impl Global {
    pub fn overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            seed: self.seed,
            k: self.k,
            mode: self.mode.map(Mode::from),
            ..Default::default()
        }
    }
}

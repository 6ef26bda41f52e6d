use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::checker::{ExploreLimits, Property, Relation};
use crate::exception::ExceptionKind;
use crate::framework::AssembleOptions;
use crate::kernel::{EventPattern, StepPolicy};

#[derive(Debug, Parser)]
#[command(
    name = "scj2",
    version,
    about = "Check, export and animate SCJ Level 2 programs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Explore a program and check properties.
    Check(CheckArgs),
    /// Write the explored state graph and the channel table.
    Export(ExportArgs),
    /// Serve the animation protocol over local HTTP.
    Serve(ServeArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Free,
    Priority,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Structured,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    pub input: PathBuf,
    /// Scheduling: all interleavings, or only the highest-priority thread.
    #[arg(long, value_enum, default_value_t = Mode::Free)]
    pub mode: Mode,
    /// Let waiting threads wake without a notify.
    #[arg(long)]
    pub spurious: bool,
}

impl ModelArgs {
    pub fn policy(&self) -> StepPolicy {
        StepPolicy {
            maximal_progress: true,
            priority: self.mode == Mode::Priority,
        }
    }

    pub fn assemble_options(&self) -> AssembleOptions {
        AssembleOptions {
            spurious: self.spurious,
        }
    }
}

#[derive(Debug, Args)]
pub struct LimitArgs {
    #[arg(long, default_value_t = 5_000_000)]
    pub max_states: usize,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub max_ticks: Option<usize>,
    /// Exploration threads. Results do not depend on this.
    #[arg(long, default_value_t = default_workers())]
    pub workers: usize,
}

fn default_workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

impl LimitArgs {
    pub fn limits(&self, policy: StepPolicy) -> ExploreLimits {
        ExploreLimits {
            max_states: self.max_states,
            max_depth: self.max_depth,
            max_ticks: self.max_ticks,
            policy,
            workers: self.workers,
        }
    }
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub limits: LimitArgs,
    /// Deadlock, divergence and every exception.
    #[arg(long)]
    pub all: bool,
    #[arg(long)]
    pub deadlock: bool,
    #[arg(long)]
    pub divergence: bool,
    #[arg(long, value_name = "KIND")]
    pub exception: Vec<ExceptionKind>,
    /// Every maximal trace has `<rel> <n>` events matching the pattern.
    #[arg(long, num_args = 3, value_names = ["PATTERN", "REL", "N"])]
    pub count: Vec<String>,
    /// No `before` event occurs after an `after` event.
    #[arg(long, num_args = 2, value_names = ["BEFORE", "AFTER"])]
    pub order: Vec<String>,
    /// Between two `first` events there is a `second` event.
    #[arg(long, num_args = 2, value_names = ["FIRST", "SECOND"])]
    pub alternation: Vec<String>,
    /// No trace performs an event matching the pattern.
    #[arg(long, value_name = "PATTERN")]
    pub never: Vec<String>,
    #[arg(long, value_enum, default_value_t = Format::Human)]
    pub format: Format,
}

fn pattern(text: &str) -> Result<EventPattern, String> {
    EventPattern::parse(text).ok_or_else(|| format!("bad event pattern `{text}`"))
}

impl CheckArgs {
    /// Requested properties in a fixed order. Empty when none was asked for.
    pub fn properties(&self) -> Result<Vec<Property>, String> {
        let mut out = Vec::new();
        if self.all || self.deadlock {
            out.push(Property::Deadlock);
        }
        if self.all || self.divergence {
            out.push(Property::Divergence);
        }
        for k in ExceptionKind::ALL {
            if self.all || self.exception.contains(&k) {
                out.push(Property::Exception(k));
            }
        }
        for c in self.count.chunks(3) {
            let n = c[2].parse().map_err(|_| format!("bad count `{}`", c[2]))?;
            out.push(Property::EventCount {
                pattern: pattern(&c[0])?,
                relation: c[1].parse::<Relation>()?,
                n,
            });
        }
        for o in self.order.chunks(2) {
            out.push(Property::Order {
                before: pattern(&o[0])?,
                after: pattern(&o[1])?,
            });
        }
        for a in self.alternation.chunks(2) {
            out.push(Property::Alternation {
                first: pattern(&a[0])?,
                second: pattern(&a[1])?,
            });
        }
        for p in &self.never {
            out.push(Property::Never(pattern(p)?));
        }
        Ok(out)
    }
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub limits: LimitArgs,
    /// Graph file; the channel table goes next to it with a `.channels` suffix.
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
}

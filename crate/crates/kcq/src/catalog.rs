//! Checked-in experiment configs, embedded so `verify-all` runs anywhere.

use crate::config::ExperimentConfig;
use crate::error::Result;

pub struct Entry {
    pub file: &'static str,
    /// Acceptance criterion the config belongs to; 0 for plain examples.
    pub criterion: u8,
    pub text: &'static str,
}

macro_rules! entry {
    ($c:expr, $f:literal) => {
        Entry {
            file: $f,
            criterion: $c,
            text: include_str!(concat!("../experiments/", $f)),
        }
    };
}

pub const CATALOG: &[Entry] = &[
    entry!(1, "c01-eq1-asymptote.json"),
    entry!(2, "c02-cipher-independence.json"),
    entry!(3, "c03-qk-bers.json"),
    entry!(3, "c03-qk-key-guess.json"),
    entry!(4, "c04-key-verify.json"),
    entry!(5, "c05-heterodyne-bpsk.json"),
    entry!(5, "c05-receiver-ordering.json"),
    entry!(5, "c05-phase-width.json"),
    entry!(6, "c06-hiding-full-circle.json"),
    entry!(6, "c06-hiding-semicircle.json"),
    entry!(6, "c06-hiding-none.json"),
    entry!(7, "c07-cppm-bob-grid.json"),
    entry!(8, "c08-cppm-eve-grid.json"),
    entry!(8, "c08-cppm-eve-scaling.json"),
    entry!(9, "c09-cppm-error-profile.json"),
    entry!(10, "c10-solve-p1.json"),
    entry!(10, "c10-trial-complexity.json"),
    entry!(10, "c10-lemma-checks.json"),
    entry!(11, "c11-lfsr-periods.json"),
    entry!(11, "c11-berlekamp-massey.json"),
    entry!(12, "c12-printed-claims.json"),
    entry!(0, "qk-noiseless-records.json"),
    entry!(0, "cppm-bob-sweep.json"),
    entry!(0, "alpha-eta-phase-attack.json"),
];

pub const CRITERIA: u8 = 12;

impl Entry {
    pub fn config(&self) -> Result<ExperimentConfig> {
        ExperimentConfig::parse(self.text).map_err(|e| match e {
            crate::HarnessError::Config { path, msg } => crate::HarnessError::config(format!("{}: {path}", self.file), msg),
            other => other,
        })
    }
}

pub fn for_criterion(c: u8) -> impl Iterator<Item = &'static Entry> {
    CATALOG.iter().filter(move |e| e.criterion == c)
}

pub fn find(file: &str) -> Option<&'static Entry> {
    CATALOG.iter().find(|e| e.file == file)
}

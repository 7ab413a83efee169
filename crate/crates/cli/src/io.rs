use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_bigint::BigInt;
use num_traits::Zero;
use popstack_core::CountMatrix;
use popstack_fit::SeriesTerms;

use crate::error::CliError;

/// A parsed b-file: one value per consecutive index starting at `first_n`.
pub struct BFile {
    pub first_n: u64,
    pub values: Vec<BigInt>,
}

impl BFile {
    pub fn get(&self, n: u64) -> Option<&BigInt> {
        n.checked_sub(self.first_n).and_then(|i| self.values.get(i as usize))
    }

    /// Counting sequences index from 1 and get a_0 = 0 prepended; a file
    /// that already carries n = 0 is taken verbatim.
    pub fn series(&self) -> Result<SeriesTerms, CliError> {
        match self.first_n {
            0 => Ok(SeriesTerms::from_integers(&self.values)),
            1 => Ok(SeriesTerms::counting_sequence(&self.values)),
            n => Err(CliError::Precondition(format!(
                "b-file starts at n = {n}; a series needs indices from 0 or 1"
            ))),
        }
    }
}

/// Reads "n value" lines, skipping blanks and `#` comments. Indices must
/// be consecutive so that a write-then-read round trip is the identity.
pub fn read_bfile(path: &Path) -> Result<BFile, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Precondition(format!("cannot read {}: {e}", path.display())))?;
    let mut first_n = 0u64;
    let mut values: Vec<BigInt> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let (Some(n), Some(v), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(bad_line(path, idx, "expected \"n value\""));
        };
        let n: u64 = n
            .parse()
            .map_err(|_| bad_line(path, idx, "index is not a nonnegative integer"))?;
        let v: BigInt = v.parse().map_err(|_| bad_line(path, idx, "value is not an integer"))?;
        if values.is_empty() {
            first_n = n;
        } else if n != first_n + values.len() as u64 {
            return Err(bad_line(path, idx, "indices must be consecutive"));
        }
        values.push(v);
    }
    if values.is_empty() {
        return Err(CliError::Precondition(format!("{}: no data lines", path.display())));
    }
    Ok(BFile { first_n, values })
}

fn bad_line(path: &Path, idx: usize, what: &str) -> CliError {
    CliError::Precondition(format!("{}:{}: {what}", path.display(), idx + 1))
}

pub fn bfile_text(first_n: u64, values: &[BigInt]) -> String {
    let mut out = String::new();
    for (i, v) in values.iter().enumerate() {
        writeln!(out, "{} {v}", first_n + i as u64).expect("write to string");
    }
    out
}

/// "n k f(n,k)" triples, zero cells omitted, sorted by (n, k).
pub fn matrix_text(matrix: &CountMatrix<BigInt>) -> String {
    let mut out = String::new();
    for n in 1..=matrix.n_max() {
        for (k, v) in matrix.row(n) {
            if !v.is_zero() {
                writeln!(out, "{n} {k} {v}").expect("write to string");
            }
        }
    }
    out
}

/// Machine-readable text goes to `path` when given, leaving a one-line
/// summary on stdout; without a path the text itself is the stdout payload.
pub fn emit(path: Option<&Path>, text: &str, what: &str) -> Result<(), CliError> {
    match path {
        Some(p) => {
            fs::write(p, text)
                .map_err(|e| CliError::Resource(format!("cannot write {}: {e}", p.display())))?;
            println!("{what}: {} lines -> {}", text.lines().count(), p.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

//! Text formats for frequency-set caches and surface patches.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use toral_core::lattice::{enumerate_sphere, FrequencySet, IntPoint};
use toral_core::surface::{Monomial, SurfacePatch};
use toral_core::Budget;

use crate::error::{LabError, Result};

/// Data lines of a text file with `#` comments and blank lines removed,
/// paired with their 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn fields<T: std::str::FromStr>(line: &str, n: usize, source: &str, lineno: usize, what: &str) -> Result<Vec<T>> {
    let bad = || LabError::Format { path: source.into(), line: lineno, reason: format!("expected {what}, found {line:?}") };
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != n {
        return Err(bad());
    }
    parts.iter().map(|p| p.parse().map_err(|_| bad())).collect()
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| LabError::Io { path: path.into(), source })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| LabError::Io { path: path.into(), source })
}

pub fn frequency_cache_name(d: usize, e: u64) -> String {
    format!("sphere_d{d}_E{e}.txt")
}

/// Header `d E count`, then one space-separated point per line.
pub fn format_frequency_set(set: &FrequencySet) -> String {
    let mut out = format!("{} {} {}\n", set.dim(), set.energy(), set.len());
    for p in set.iter() {
        let line: Vec<String> = p.iter().map(|c| c.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_frequency_set(text: &str, source: &str) -> Result<FrequencySet> {
    let mut lines = data_lines(text);
    let (lineno, header) =
        lines.next().ok_or_else(|| LabError::Format { path: source.into(), line: 0, reason: "empty file".into() })?;
    let h: Vec<u64> = fields(header, 3, source, lineno, "header `d E count`")?;
    let (d, e, count) = (h[0] as usize, h[1], h[2] as usize);
    let mut points = Vec::with_capacity(count);
    let mut last = lineno;
    for (lineno, line) in lines {
        points.push(IntPoint(fields(line, d, source, lineno, &format!("{d} integers"))?));
        last = lineno;
    }
    if points.len() != count {
        return Err(LabError::Format {
            path: source.into(),
            line: last,
            reason: format!("header declares {count} points, file has {}", points.len()),
        });
    }
    Ok(FrequencySet::from_points(d, e, &points)?)
}

pub fn write_frequency_set(path: &Path, set: &FrequencySet) -> Result<()> {
    write_text(path, &format_frequency_set(set))
}

pub fn read_frequency_set(path: &Path) -> Result<FrequencySet> {
    parse_frequency_set(&read_text(path)?, &path.display().to_string())
}

/// Directory of frequency-set files keyed by (d, E).
#[derive(Debug, Clone)]
pub struct FrequencyCache {
    dir: PathBuf,
}

impl FrequencyCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        FrequencyCache { dir: dir.into() }
    }

    pub fn path(&self, d: usize, e: u64) -> PathBuf {
        self.dir.join(frequency_cache_name(d, e))
    }

    /// Reads the cached set, or enumerates and stores it.
    pub fn get(&self, d: usize, e: u64, budget: &Budget) -> Result<FrequencySet> {
        let path = self.path(d, e);
        if path.exists() {
            let set = read_frequency_set(&path)?;
            if set.dim() != d || set.energy() != e {
                return Err(LabError::Format {
                    path: path.display().to_string(),
                    line: 1,
                    reason: format!("file holds (d, E) = ({}, {}), expected ({d}, {e})", set.dim(), set.energy()),
                });
            }
            return Ok(set);
        }
        let set = enumerate_sphere(d, e, budget)?;
        std::fs::create_dir_all(&self.dir).map_err(|source| LabError::Io { path: self.dir.clone(), source })?;
        write_frequency_set(&path, &set)?;
        Ok(set)
    }
}

/// Header `epsilon domain_radius bump_width`, then `alpha beta coeff` lines.
pub fn format_patch(patch: &SurfacePatch) -> String {
    let mut out = format!("{} {:e} {:e}\n", patch.epsilon(), patch.domain_radius(), patch.bump_width());
    for m in patch.terms() {
        let _ = writeln!(out, "{} {} {:e}", m.alpha, m.beta, m.coeff);
    }
    out
}

pub fn parse_patch(text: &str, source: &str) -> Result<SurfacePatch> {
    let mut lines = data_lines(text);
    let (lineno, header) =
        lines.next().ok_or_else(|| LabError::Format { path: source.into(), line: 0, reason: "empty file".into() })?;
    let what = "header `epsilon domain_radius bump_width`";
    let parts: Vec<&str> = header.split_whitespace().collect();
    let bad = || LabError::Format { path: source.into(), line: lineno, reason: format!("expected {what}, found {header:?}") };
    if parts.len() != 3 {
        return Err(bad());
    }
    let epsilon: i8 = parts[0].parse().map_err(|_| bad())?;
    let domain: f64 = parts[1].parse().map_err(|_| bad())?;
    let width: f64 = parts[2].parse().map_err(|_| bad())?;
    let mut terms = Vec::new();
    for (lineno, line) in lines {
        let p: Vec<&str> = line.split_whitespace().collect();
        let bad = || LabError::Format {
            path: source.into(),
            line: lineno,
            reason: format!("expected `alpha beta coeff`, found {line:?}"),
        };
        if p.len() != 3 {
            return Err(bad());
        }
        terms.push(Monomial {
            alpha: p[0].parse().map_err(|_| bad())?,
            beta: p[1].parse().map_err(|_| bad())?,
            coeff: p[2].parse().map_err(|_| bad())?,
        });
    }
    Ok(SurfacePatch::new(epsilon, terms, domain, width)?)
}

pub fn write_patch(path: &Path, patch: &SurfacePatch) -> Result<()> {
    write_text(path, &format_patch(patch))
}

pub fn read_patch(path: &Path) -> Result<SurfacePatch> {
    parse_patch(&read_text(path)?, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frequency_set_round_trip() {
        let b = Budget::default();
        let set = enumerate_sphere(3, 27, &b).unwrap();
        let text = format_frequency_set(&set);
        assert!(text.starts_with("3 27 "));
        assert_eq!(parse_frequency_set(&text, "t").unwrap(), set);
        assert_eq!(frequency_cache_name(3, 27), "sphere_d3_E27.txt");
    }

    #[test]
    fn frequency_set_errors_name_the_line() {
        let err = parse_frequency_set("2 25 2\n3 4\n4\n", "f.txt").unwrap_err();
        assert!(err.to_string().starts_with("f.txt:3:"));
        let err = parse_frequency_set("2 25 3\n3 4\n4 3\n", "f.txt").unwrap_err();
        assert!(err.to_string().contains("declares 3 points"));
        assert!(parse_frequency_set("2 25 1\n3 3\n", "f.txt").is_err());
    }

    #[test]
    fn cache_enumerates_once_then_reads() {
        let dir = tempfile::tempdir().unwrap();
        let cache = FrequencyCache::new(dir.path());
        let b = Budget::default();
        let first = cache.get(2, 65, &b).unwrap();
        assert!(cache.path(2, 65).exists());
        let used = b.used();
        assert_eq!(cache.get(2, 65, &b).unwrap(), first);
        assert_eq!(b.used(), used);
    }

    #[test]
    fn patch_round_trip() {
        for patch in [SurfacePatch::sphere_cap(), SurfacePatch::tilted_saddle(), SurfacePatch::paraboloid(0.2)] {
            let text = format_patch(&patch);
            assert_eq!(parse_patch(&text, "p").unwrap(), patch);
        }
    }

    #[test]
    fn patch_file_with_comments() {
        let text = "# saddle with a cubic tilt\n-1 0.2 0.2\n3 0 0.1\n1 2 0.05\n";
        let patch = parse_patch(text, "p").unwrap();
        assert_eq!(patch, SurfacePatch::tilted_saddle());
        let err = parse_patch("1 0.2\n", "p").unwrap_err();
        assert!(err.to_string().contains("epsilon domain_radius bump_width"));
    }
}

//! Categorical tabular data, conjunctive count and histogram queries, and noisy release.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mechanism::MechanismSpec;
use crate::sampling::{Noise, NoiseSampler, SeededStream};

/// A table of categorical records; every value is kept as text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    schema: Vec<String>,
    records: Vec<Vec<String>>,
}

#[derive(Clone, Copy, Debug)]
pub struct IngestOptions {
    pub has_header: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self { has_header: true }
    }
}

impl Dataset {
    pub fn new(schema: Vec<String>, records: Vec<Vec<String>>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for name in &schema {
            if !seen.insert(name.as_str()) {
                return Err(Error::Query(format!("duplicate attribute {name:?}")));
            }
        }
        for (i, r) in records.iter().enumerate() {
            if r.len() != schema.len() {
                return Err(Error::Parse {
                    row: i + 1,
                    message: format!("expected {} fields, found {}", schema.len(), r.len()),
                });
            }
        }
        Ok(Self { schema, records })
    }

    pub fn schema(&self) -> &[String] {
        &self.schema
    }

    pub fn records(&self) -> &[Vec<String>] {
        &self.records
    }

    pub fn row_count(&self) -> usize {
        self.records.len()
    }

    pub fn attribute_index(&self, name: &str) -> Result<usize> {
        self.schema
            .iter()
            .position(|a| a == name)
            .ok_or_else(|| Error::Query(format!("unknown attribute {name:?}")))
    }

    /// Distinct values of an attribute, sorted.
    pub fn distinct_values(&self, attribute: usize) -> Vec<&str> {
        let set: BTreeSet<&str> = self.records.iter().map(|r| r[attribute].as_str()).collect();
        set.into_iter().collect()
    }
}

/// Reads a comma-separated file. Values are trimmed; `?` stays an ordinary category.
pub fn load_dataset<R: Read>(mut source: R, options: IngestOptions) -> Result<Dataset> {
    let mut text = Vec::new();
    source.read_to_end(&mut text)?;
    // A record's position is where the reader resumed, before any skipped blank lines.
    let line_of = |byte: u64| {
        let start = text[byte as usize..]
            .iter()
            .position(|&b| b != b'\n' && b != b'\r')
            .map_or(text.len(), |p| byte as usize + p);
        1 + text[..start].iter().filter(|&&b| b == b'\n').count()
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_slice());
    let mut rows = reader.records();
    let first = match rows.next() {
        Some(r) => r?,
        None => return Err(Error::EmptyDataset),
    };
    let width = first.len();
    let (schema, mut records) = if options.has_header {
        (first.iter().map(str::to_string).collect(), Vec::new())
    } else {
        let schema = (1..=width).map(|i| format!("col{i}")).collect();
        (schema, vec![first.iter().map(str::to_string).collect::<Vec<_>>()])
    };
    for (i, row) in rows.enumerate() {
        let row = row?;
        // blank lines are skipped by the reader; a lone empty field is a blank line too
        if row.len() == 1 && row[0].is_empty() && width > 1 {
            continue;
        }
        let line = row.position().map_or(i + 2, |p| line_of(p.byte()));
        if row.len() != width {
            return Err(Error::Parse {
                row: line,
                message: format!("expected {width} fields, found {}", row.len()),
            });
        }
        records.push(row.iter().map(str::to_string).collect());
    }
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Dataset::new(schema, records)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryKind {
    Count,
    Histogram(String),
}

/// Conjunction of `attribute = value` predicates, answered as a count or a histogram.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QuerySpec {
    pub predicates: Vec<(String, String)>,
    pub kind: QueryKind,
}

impl QuerySpec {
    pub fn count(predicates: Vec<(String, String)>) -> Result<Self> {
        Self::build(predicates, QueryKind::Count)
    }

    pub fn histogram(attribute: &str, predicates: Vec<(String, String)>) -> Result<Self> {
        Self::build(predicates, QueryKind::Histogram(attribute.to_string()))
    }

    fn build(predicates: Vec<(String, String)>, kind: QueryKind) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for (a, _) in &predicates {
            if !seen.insert(a.as_str()) {
                return Err(Error::Query(format!("attribute {a:?} constrained twice")));
            }
        }
        Ok(Self { predicates, kind })
    }

    /// Parses `attr=value[,attr=value...]`; an empty string is the empty conjunction.
    pub fn parse_predicates(text: &str) -> Result<Vec<(String, String)>> {
        let text = text.trim();
        if text.is_empty() {
            return Ok(Vec::new());
        }
        text.split(',')
            .map(|part| {
                let (a, v) = part
                    .split_once('=')
                    .ok_or_else(|| Error::Query(format!("predicate {part:?} is not attr=value")))?;
                let a = a.trim();
                if a.is_empty() {
                    return Err(Error::Query(format!("predicate {part:?} has no attribute")));
                }
                Ok((a.to_string(), v.trim().to_string()))
            })
            .collect()
    }

    pub fn parse_count(text: &str) -> Result<Self> {
        Self::count(Self::parse_predicates(text)?)
    }

    fn resolve(&self, ds: &Dataset) -> Result<Vec<(usize, &str)>> {
        self.predicates
            .iter()
            .map(|(a, v)| Ok((ds.attribute_index(a)?, v.as_str())))
            .collect()
    }
}

impl fmt::Display for QuerySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let preds: Vec<String> = self.predicates.iter().map(|(a, v)| format!("{a}={v}")).collect();
        match &self.kind {
            QueryKind::Count => write!(f, "count({})", preds.join(",")),
            QueryKind::Histogram(attr) => write!(f, "histogram({attr} | {})", preds.join(",")),
        }
    }
}

fn matches(record: &[String], preds: &[(usize, &str)]) -> bool {
    preds.iter().all(|&(i, v)| record[i] == v)
}

/// Number of records satisfying every predicate.
pub fn count_query(ds: &Dataset, q: &QuerySpec) -> Result<u64> {
    let preds = q.resolve(ds)?;
    Ok(ds.records.iter().filter(|r| matches(r, &preds)).count() as u64)
}

/// Counts per value of `attribute` among records satisfying the predicates of `q`.
/// Bins are the values observed in the full dataset, so empty bins appear as zeros.
pub fn histogram_query(ds: &Dataset, q: &QuerySpec) -> Result<BTreeMap<String, u64>> {
    let attribute = match &q.kind {
        QueryKind::Histogram(a) => a,
        QueryKind::Count => return Err(Error::Query("histogram_query needs a histogram query".into())),
    };
    let idx = ds.attribute_index(attribute)?;
    let preds = q.resolve(ds)?;
    let mut bins: BTreeMap<String, u64> = ds.distinct_values(idx).into_iter().map(|v| (v.to_string(), 0)).collect();
    for r in ds.records.iter().filter(|r| matches(r, &preds)) {
        *bins.get_mut(&r[idx]).expect("bin for observed value") += 1;
    }
    Ok(bins)
}

/// `ds` with the record at `index` removed.
pub fn neighbors(ds: &Dataset, index: usize) -> Result<Dataset> {
    if index >= ds.row_count() {
        return Err(Error::Query(format!(
            "record index {index} out of range for {} rows",
            ds.row_count()
        )));
    }
    let mut records = ds.records.clone();
    records.remove(index);
    Ok(Dataset {
        schema: ds.schema.clone(),
        records,
    })
}

/// One released cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReleasedCell {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    pub true_value: u64,
    pub released: Noise,
    /// The noisy value went negative and was replaced by 0.
    pub clamped: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoisyRelease {
    pub mechanism: MechanismSpec,
    pub cells: Vec<ReleasedCell>,
}

/// Releases `true + noise` per cell, clamping negative results to 0.
///
/// Cell `i` draws from `stream.child(&[i])`, so a histogram cell receives the
/// same noise a count query would at the same position.
pub fn release(
    cells: &[(Option<String>, u64)],
    spec: &MechanismSpec,
    stream: &SeededStream,
    allow_unsafe: bool,
) -> Result<NoisyRelease> {
    let sampler = NoiseSampler::new(spec, allow_unsafe)?;
    let out = cells
        .iter()
        .enumerate()
        .map(|(i, (key, value))| {
            let mut s = stream.child(&[i as u64]);
            let (released, clamped) = match sampler.sample(&mut s) {
                Noise::Integer(k) => {
                    let v = *value as i64 + k;
                    (Noise::Integer(v.max(0)), v < 0)
                }
                Noise::Real(y) => {
                    let v = *value as f64 + y;
                    (Noise::Real(v.max(0.0)), v < 0.0)
                }
            };
            ReleasedCell {
                key: key.clone(),
                true_value: *value,
                released,
                clamped,
            }
        })
        .collect();
    Ok(NoisyRelease {
        mechanism: *spec,
        cells: out,
    })
}

/// Random two-attribute count queries: a uniform pair of distinct attributes,
/// then a uniform observed value for each.
pub fn random_pair_queries(ds: &Dataset, n: usize, stream: &mut SeededStream) -> Result<Vec<QuerySpec>> {
    let width = ds.schema.len();
    if width < 2 {
        return Err(Error::Query("pair queries need at least two attributes".into()));
    }
    if ds.row_count() == 0 {
        return Err(Error::EmptyDataset);
    }
    let values: Vec<Vec<&str>> = (0..width).map(|i| ds.distinct_values(i)).collect();
    (0..n)
        .map(|_| {
            let a = stream.below(width as u64) as usize;
            let mut b = stream.below(width as u64 - 1) as usize;
            if b >= a {
                b += 1;
            }
            let preds = [a, b]
                .iter()
                .map(|&i| {
                    let v = values[i][stream.below(values[i].len() as u64) as usize];
                    (ds.schema[i].clone(), v.to_string())
                })
                .collect();
            QuerySpec::count(preds)
        })
        .collect()
}

/// A synthetic categorical table with Census-like attributes and skewed marginals.
pub fn synthetic_dataset(rows: usize, seed: u64) -> Dataset {
    const ATTRS: [(&str, &[&str]); 6] = [
        ("workclass", &["Private", "Self-emp-not-inc", "Local-gov", "State-gov", "Self-emp-inc", "Federal-gov", "?"]),
        ("education", &["HS-grad", "Some-college", "Bachelors", "Masters", "Assoc-voc", "11th", "Assoc-acdm", "10th", "Doctorate"]),
        ("marital-status", &["Married-civ-spouse", "Never-married", "Divorced", "Separated", "Widowed"]),
        ("relationship", &["Husband", "Not-in-family", "Own-child", "Unmarried", "Wife", "Other-relative"]),
        ("race", &["White", "Black", "Asian-Pac-Islander", "Amer-Indian-Eskimo", "Other"]),
        ("sex", &["Male", "Female"]),
    ];
    let mut stream = SeededStream::new(seed, 0x5eed);
    let records = (0..rows)
        .map(|_| {
            ATTRS
                .iter()
                .map(|(_, vals)| {
                    // weights proportional to 1 / (rank + 1)
                    let total: f64 = (1..=vals.len()).map(|r| 1.0 / r as f64).sum();
                    let mut u = stream.uniform() * total;
                    let mut pick = vals.len() - 1;
                    for (r, _) in vals.iter().enumerate() {
                        u -= 1.0 / (r + 1) as f64;
                        if u <= 0.0 {
                            pick = r;
                            break;
                        }
                    }
                    vals[pick].to_string()
                })
                .collect()
        })
        .collect();
    Dataset {
        schema: ATTRS.iter().map(|(a, _)| a.to_string()).collect(),
        records,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> Dataset {
        let csv = "age,work,sex\n30, Private ,Male\n40,?,Female\n30,Private,Female\n50,Local-gov,Male\n30,Private,Male\n";
        load_dataset(csv.as_bytes(), IngestOptions::default()).unwrap()
    }

    #[test]
    fn ingest_trims_and_keeps_question_mark() {
        let ds = fixture();
        assert_eq!(ds.row_count(), 5);
        assert_eq!(ds.records()[0], vec!["30", "Private", "Male"]);
        let q = QuerySpec::parse_count("work=?").unwrap();
        assert_eq!(count_query(&ds, &q).unwrap(), 1);
    }

    #[test]
    fn ingest_errors() {
        let err = load_dataset("a,b\n1,2\n3\n".as_bytes(), IngestOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 3, .. }), "{err}");
        assert!(matches!(load_dataset("".as_bytes(), IngestOptions::default()), Err(Error::EmptyDataset)));
        let headless = load_dataset("x,y\n".as_bytes(), IngestOptions { has_header: false }).unwrap();
        assert_eq!(headless.schema(), ["col1", "col2"]);
        assert_eq!(headless.row_count(), 1);
    }

    #[test]
    fn counts() {
        let ds = fixture();
        assert_eq!(count_query(&ds, &QuerySpec::count(vec![]).unwrap()).unwrap(), 5);
        assert_eq!(count_query(&ds, &QuerySpec::parse_count("age=30,sex=Male").unwrap()).unwrap(), 2);
        assert_eq!(count_query(&ds, &QuerySpec::parse_count("age=99").unwrap()).unwrap(), 0);
        assert!(matches!(
            count_query(&ds, &QuerySpec::parse_count("height=1").unwrap()),
            Err(Error::Query(_))
        ));
        assert!(QuerySpec::parse_count("age=30,age=40").is_err());
        assert!(QuerySpec::parse_count("age").is_err());
    }

    #[test]
    fn histograms_partition() {
        let ds = fixture();
        let h = histogram_query(&ds, &QuerySpec::histogram("work", vec![]).unwrap()).unwrap();
        assert_eq!(h.len(), 3);
        assert_eq!(h.values().sum::<u64>(), 5);
        assert!(histogram_query(&ds, &QuerySpec::histogram("nope", vec![]).unwrap()).is_err());
    }

    #[test]
    fn neighbor_removes_one_record() {
        let ds = fixture();
        let n = neighbors(&ds, 0).unwrap();
        assert_eq!(n.row_count(), 4);
        assert_eq!(ds.row_count(), 5);
        let q = QuerySpec::parse_count("age=30,sex=Male").unwrap();
        assert_eq!(count_query(&n, &q).unwrap(), 1);
        let q = QuerySpec::parse_count("sex=Female").unwrap();
        assert_eq!(count_query(&n, &q).unwrap(), count_query(&ds, &q).unwrap());
        assert!(neighbors(&ds, 5).is_err());
    }

    #[test]
    fn release_clamps_and_flags() {
        let spec = MechanismSpec::geometric(0.1).unwrap();
        let stream = SeededStream::new(3, 0);
        let cells: Vec<_> = (0..200).map(|i| (Some(i.to_string()), 0u64)).collect();
        let r = release(&cells, &spec, &stream, false).unwrap();
        assert!(r.cells.iter().all(|c| c.released.as_f64() >= 0.0));
        assert!(r.cells.iter().any(|c| c.clamped));
        for (i, c) in r.cells.iter().enumerate() {
            let noise = NoiseSampler::new(&spec, false).unwrap().sample_integer(&mut stream.child(&[i as u64]));
            assert_eq!(c.clamped, noise < 0);
            assert_eq!(c.released, Noise::Integer(noise.max(0)));
        }
        let zero = release(&[(None, 7)], &MechanismSpec::NoNoise, &stream, true).unwrap();
        assert_eq!(zero.cells[0].released, Noise::Integer(7));
        assert!(release(&[(None, 7)], &MechanismSpec::NoNoise, &stream, false).is_err());
    }

    #[test]
    fn synthetic_is_deterministic() {
        let a = synthetic_dataset(100, 9);
        assert_eq!(a, synthetic_dataset(100, 9));
        assert_ne!(a, synthetic_dataset(100, 10));
        assert_eq!(a.row_count(), 100);
    }
}

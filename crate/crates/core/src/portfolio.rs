//! Efficient-frontier input, quantization, and the two portfolio drivers:
//! conditional slicing over (return, risk) and maximum-Sharpe selection.

use std::io::Read;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::oracle::{single_list_oracle, two_list_oracle, OracleCircuit, ValueTable};
use crate::search::{
    enumerate_solutions, gas, Backend, Direction, EnumerateConfig, Enumeration, GasConfig,
    GasOutcome,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PortfolioRecord {
    pub id: u64,
    pub expected_return: f64,
    pub std_dev: f64,
    /// Sharpe ratio at a zero risk-free rate.
    pub sharpe: f64,
}

impl PortfolioRecord {
    pub fn new(id: u64, expected_return: f64, std_dev: f64) -> Result<Self> {
        check_record(0, expected_return, std_dev)?;
        Ok(PortfolioRecord {
            id,
            expected_return,
            std_dev,
            sharpe: expected_return / std_dev,
        })
    }
}

fn check_record(line: u64, expected_return: f64, std_dev: f64) -> Result<()> {
    if !(0.0..1.0).contains(&expected_return) {
        return Err(Error::Domain {
            line,
            field: "expected_return",
            value: expected_return,
        });
    }
    if !(std_dev > 0.0 && std_dev < 1.0) {
        return Err(Error::Domain {
            line,
            field: "std_dev",
            value: std_dev,
        });
    }
    Ok(())
}

/// Frontier records quantized to `t` bits and padded to a power of two.
///
/// Padding rows carry return 0 and risk `2^t - 1`, so they never pass a
/// `return > S1 AND risk < S2` condition for any representable thresholds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontierTable {
    records: Vec<PortfolioRecord>,
    t: usize,
    padded_n: usize,
    returns: ValueTable,
    sigmas: ValueTable,
}

impl FrontierTable {
    pub fn from_records(records: Vec<PortfolioRecord>, t: usize) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for r in &records {
            check_record(0, r.expected_return, r.std_dev)?;
            if !seen.insert(r.id) {
                return Err(Error::arg(format!("duplicate portfolio id {}", r.id)));
            }
        }
        if t == 0 || t > 52 {
            return Err(Error::arg(format!("resolution of {t} bits is unsupported")));
        }
        let max = (1u64 << t) - 1;
        let r = records
            .iter()
            .map(|p| quantize(p.expected_return, t))
            .collect::<Result<Vec<_>>>()?;
        let s = records
            .iter()
            .map(|p| quantize(p.std_dev, t))
            .collect::<Result<Vec<_>>>()?;
        let returns = ValueTable::padded(t, r, 0)?;
        let sigmas = ValueTable::padded(t, s, max)?;
        Ok(FrontierTable {
            padded_n: returns.n(),
            records,
            t,
            returns,
            sigmas,
        })
    }

    pub fn records(&self) -> &[PortfolioRecord] {
        &self.records
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Index bits after padding.
    pub fn padded_n(&self) -> usize {
        self.padded_n
    }

    pub fn padded_len(&self) -> usize {
        1 << self.padded_n
    }

    pub fn is_sentinel(&self, index: usize) -> bool {
        index >= self.records.len()
    }

    pub fn sentinel_count(&self) -> usize {
        self.padded_len() - self.records.len()
    }

    pub fn returns(&self) -> &ValueTable {
        &self.returns
    }

    pub fn sigmas(&self) -> &ValueTable {
        &self.sigmas
    }

    /// Ids of real rows passing `r > s1 AND σ < s2` on quantized values.
    pub fn classical_filter(&self, s1: u64, s2: u64) -> Vec<u64> {
        (0..self.records.len())
            .filter(|&k| self.returns.get(k) > s1 && self.sigmas.get(k) < s2)
            .map(|k| self.records[k].id)
            .collect()
    }
}

/// Parse `id,expected_return,std_dev` CSV and quantize it to `t` bits.
pub fn load_frontier<R: Read>(source: R, t: usize) -> Result<FrontierTable> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let expected = ["id", "expected_return", "std_dev"];
    if headers.iter().ne(expected) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `{}`", expected.join(",")),
        });
    }
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let id = row[0].parse::<u64>().map_err(|e| Error::Parse {
            line,
            message: format!("id `{}`: {e}", &row[0]),
        })?;
        let num = |i: usize, name: &str| -> Result<f64> {
            row[i].parse::<f64>().map_err(|e| Error::Parse {
                line,
                message: format!("{name} `{}`: {e}", &row[i]),
            })
        };
        let expected_return = num(1, "expected_return")?;
        let std_dev = num(2, "std_dev")?;
        check_record(line, expected_return, std_dev)?;
        records.push(PortfolioRecord {
            id,
            expected_return,
            std_dev,
            sharpe: expected_return / std_dev,
        });
    }
    if records.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "no portfolio rows".into(),
        });
    }
    FrontierTable::from_records(records, t).map_err(|e| match e {
        Error::Argument(message) => Error::Parse { line: 0, message },
        other => other,
    })
}

/// `round(value·2^t)` with halves rounded up, clamped to `2^t - 1`.
pub fn quantize(value: f64, t: usize) -> Result<u64> {
    if !(0.0..1.0).contains(&value) {
        return Err(Error::arg(format!("{value} is outside [0, 1)")));
    }
    if t == 0 || t > 52 {
        return Err(Error::arg(format!("resolution of {t} bits is unsupported")));
    }
    let scale = (1u64 << t) as f64;
    Ok(((value * scale + 0.5).floor() as u64).min((1u64 << t) - 1))
}

/// Quantized Sharpe ratios plus the data needed to interpret them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SharpeValues {
    pub table: ValueTable,
    /// Unscaled `(r - rf)/σ` per real row, negatives clamped to zero.
    pub raw: Vec<f64>,
    /// Divisor applied before quantization.
    pub scale: f64,
    pub warnings: Vec<String>,
}

/// Sharpe ratios rescaled into `[0, 1)` and quantized to the table's `t`.
///
/// The divisor `B·(1 + 2^-t)` with `B = (max r - rf)/min σ` bounds every
/// ratio from above without locating the argmax. Padding rows map to 0.
pub fn sharpe_values(table: &FrontierTable, risk_free_rate: f64) -> Result<SharpeValues> {
    if !(0.0..1.0).contains(&risk_free_rate) {
        return Err(Error::arg(format!(
            "risk-free rate {risk_free_rate} is outside [0, 1)"
        )));
    }
    let mut warnings = Vec::new();
    let raw: Vec<f64> = table
        .records
        .iter()
        .map(|p| {
            let s = (p.expected_return - risk_free_rate) / p.std_dev;
            if s < 0.0 {
                let w = format!(
                    "portfolio {}: negative Sharpe ratio {s:.6} clamped to 0",
                    p.id
                );
                log::warn!("{w}");
                warnings.push(w);
                0.0
            } else {
                s
            }
        })
        .collect();
    let max_r = table
        .records
        .iter()
        .map(|p| p.expected_return)
        .fold(f64::NEG_INFINITY, f64::max);
    let min_s = table
        .records
        .iter()
        .map(|p| p.std_dev)
        .fold(f64::INFINITY, f64::min);
    let bound = (max_r - risk_free_rate) / min_s;
    let t = table.t;
    let scale = if bound > 0.0 {
        bound * (1.0 + 1.0 / (1u64 << t) as f64)
    } else {
        1.0
    };
    let mut values = raw
        .iter()
        .map(|s| quantize(s / scale, t))
        .collect::<Result<Vec<_>>>()?;
    values.resize(table.padded_len(), 0);
    Ok(SharpeValues {
        table: ValueTable::new(t, values)?,
        raw,
        scale,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceResult {
    /// Selected portfolio ids in ascending order.
    pub ids: Vec<u64>,
    pub return_threshold: u64,
    pub risk_threshold: u64,
    pub enumeration: Enumeration,
}

/// The two-list oracle used by [`slice_portfolios`].
pub fn slice_oracle(
    table: &FrontierTable,
    return_min: f64,
    risk_max: f64,
) -> Result<(OracleCircuit, u64, u64)> {
    let s1 = quantize(return_min, table.t)?;
    let s2 = quantize(risk_max, table.t)?;
    Ok((
        two_list_oracle(&table.returns, &table.sigmas, s1, s2)?,
        s1,
        s2,
    ))
}

/// Ids with `return > return_min` and `risk < risk_max`, compared on
/// quantized values, found by counting plus repeated Grover search.
pub fn slice_portfolios<R: Rng + ?Sized>(
    table: &FrontierTable,
    return_min: f64,
    risk_max: f64,
    rng: &mut R,
    config: EnumerateConfig,
) -> Result<SliceResult> {
    let (oracle, s1, s2) = slice_oracle(table, return_min, risk_max)?;
    let enumeration = enumerate_solutions(&oracle, rng, config)?;
    let mut ids: Vec<u64> = enumeration
        .solutions
        .iter()
        .filter(|&&k| !table.is_sentinel(k))
        .map(|&k| table.records[k].id)
        .collect();
    ids.sort_unstable();
    Ok(SliceResult {
        ids,
        return_threshold: s1,
        risk_threshold: s2,
        enumeration,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxSharpeResult {
    pub id: u64,
    /// Row index of the selected portfolio.
    pub index: usize,
    pub sharpe_raw: f64,
    pub sharpe_quantized: u64,
    pub outcome: GasOutcome,
}

/// The single-list oracle GAS starts from, for reporting its layout.
pub fn max_sharpe_oracle(sharpe: &SharpeValues) -> Result<OracleCircuit> {
    single_list_oracle(&sharpe.table, 0)
}

/// Portfolio with the largest Sharpe ratio, found by adaptive search with
/// `repetitions` independent restarts.
pub fn max_sharpe<R: Rng + ?Sized>(
    table: &FrontierTable,
    risk_free_rate: f64,
    rng: &mut R,
    repetitions: usize,
    backend: Backend,
) -> Result<MaxSharpeResult> {
    if table.records.is_empty() {
        return Err(Error::arg("frontier has no portfolios"));
    }
    let sharpe = sharpe_values(table, risk_free_rate)?;
    let outcome = gas(
        &sharpe.table,
        Direction::Max,
        rng,
        GasConfig {
            repetitions,
            backend,
            ..GasConfig::default()
        },
    )?;
    // A padding row can only win on a tie at value 0; hand back the first
    // real row sharing that value instead.
    let index = if table.is_sentinel(outcome.index) {
        (0..table.records.len())
            .find(|&k| sharpe.table.get(k) == outcome.value)
            .ok_or_else(|| Error::Internal("search settled on a padding row".into()))?
    } else {
        outcome.index
    };
    Ok(MaxSharpeResult {
        id: table.records[index].id,
        index,
        sharpe_raw: sharpe.raw[index],
        sharpe_quantized: sharpe.table.get(index),
        outcome,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn table(rows: &[(f64, f64)], t: usize) -> FrontierTable {
        let recs = rows
            .iter()
            .enumerate()
            .map(|(i, &(r, s))| PortfolioRecord::new(i as u64, r, s).unwrap())
            .collect();
        FrontierTable::from_records(recs, t).unwrap()
    }

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize(0.99, 7).unwrap(), 127);
        assert_eq!(quantize(0.0, 5).unwrap(), 0);
        assert_eq!(quantize(0.375, 3).unwrap(), 3);
        assert_eq!(quantize(0.999, 3).unwrap(), 7);
        assert_eq!(quantize(0.0625, 3).unwrap(), 1);
        assert!(quantize(1.0, 3).is_err());
        assert!(quantize(-0.1, 3).is_err());
    }

    #[test]
    fn loading_and_padding() {
        let csv =
            "id,expected_return,std_dev\n0,0.1,0.2\n1,0.2,0.3\n2,0.05,0.1\n3,0.3,0.5\n4,0.1,0.1\n";
        let t = load_frontier(csv.as_bytes(), 7).unwrap();
        assert_eq!(t.padded_n(), 3);
        assert_eq!(t.sentinel_count(), 3);
        assert_eq!(t.returns().get(6), 0);
        assert_eq!(t.sigmas().get(6), 127);
        assert!(t.is_sentinel(5) && !t.is_sentinel(4));
    }

    #[test]
    fn loading_errors() {
        let bad = "id,expected_return,std_dev\n0,0.1,0.2\n1,0.2,0\n";
        match load_frontier(bad.as_bytes(), 7) {
            Err(Error::Domain { line, field, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(field, "std_dev");
            }
            other => panic!("{other:?}"),
        }
        let bad = "id,expected_return,std_dev\n0,abc,0.2\n";
        assert!(matches!(
            load_frontier(bad.as_bytes(), 7),
            Err(Error::Parse { line: 2, .. })
        ));
        let bad = "id,return,std_dev\n0,0.1,0.2\n";
        assert!(matches!(
            load_frontier(bad.as_bytes(), 7),
            Err(Error::Parse { line: 1, .. })
        ));
        let bad = "id,expected_return,std_dev\n0,1.0,0.2\n";
        assert!(matches!(
            load_frontier(bad.as_bytes(), 7),
            Err(Error::Domain {
                field: "expected_return",
                ..
            })
        ));
        assert!(load_frontier("id,expected_return,std_dev\n".as_bytes(), 7).is_err());
    }

    #[test]
    fn sharpe_rescaling() {
        let t = table(&[(0.10, 0.10), (0.20, 0.40)], 7);
        let s = sharpe_values(&t, 0.0).unwrap();
        assert_eq!(s.raw, vec![1.0, 0.5]);
        assert!(s.table.get(0) > s.table.get(1));

        let t = table(&[(0.1, 0.2); 4], 5);
        let s = sharpe_values(&t, 0.0).unwrap();
        assert!(s.table.values().windows(2).all(|w| w[0] == w[1]));

        let t = table(&[(0.9, 0.01)], 7);
        let s = sharpe_values(&t, 0.0).unwrap();
        assert!(s.table.get(0) < 128);
        assert_eq!(s.table.get(1), 0);

        let t = table(&[(0.1, 0.2), (0.3, 0.4)], 7);
        let s = sharpe_values(&t, 0.2).unwrap();
        assert_eq!(s.warnings.len(), 1);
        assert_eq!(s.raw[0], 0.0);
    }

    #[test]
    fn slice_matches_filter() {
        let t = table(
            &[
                (0.04, 0.05),
                (0.06, 0.07),
                (0.075, 0.09),
                (0.095, 0.12),
                (0.11, 0.15),
            ],
            7,
        );
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (lo, hi) in [(0.05, 0.13), (0.0, 0.99), (0.99, 0.99), (0.07, 0.5)] {
            let out = slice_portfolios(&t, lo, hi, &mut rng, EnumerateConfig::default()).unwrap();
            let s1 = quantize(lo, 7).unwrap();
            let s2 = quantize(hi, 7).unwrap();
            assert_eq!(out.ids, t.classical_filter(s1, s2), "{lo} {hi}");
        }
    }

    #[test]
    fn max_sharpe_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let t = table(&[(0.3, 0.5)], 7);
        assert_eq!(
            max_sharpe(&t, 0.0, &mut rng, 1, Backend::Effective)
                .unwrap()
                .id,
            0
        );
        let t = table(&[(0.1, 0.5), (0.2, 0.2), (0.1, 0.3)], 7);
        assert_eq!(
            max_sharpe(&t, 0.0, &mut rng, 3, Backend::Effective)
                .unwrap()
                .id,
            1
        );
        let empty = FrontierTable::from_records(Vec::new(), 3).unwrap();
        assert!(max_sharpe(&empty, 0.0, &mut rng, 1, Backend::Effective).is_err());
    }
}

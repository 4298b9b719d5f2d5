//! `results.csv` and `results.json`.
//!
//! The CSV has one row per (setup, SNR) point with the columns in
//! [`CSV_COLUMNS`]. Reals are written in scientific notation with nine
//! significant digits, counts as integers, unavailable values as `NaN`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::harness::campaign::{CampaignPoint, CampaignResult};
use crate::harness::crlb::CrlbRow;

pub const CSV_COLUMNS: &[&str] = &[
    "mcs",
    "dmrs_additional_position",
    "snr1_db",
    "snrc_db",
    "trials",
    "transport_blocks",
    "payload_bits",
    "num_data_res",
    "rmse_range_m",
    "rmse_doppler_hz",
    "mse_range_se",
    "mse_doppler_se",
    "throughput_bits_per_slot",
    "throughput_se",
    "throughput_analytic",
    "bler_round1",
    "bler_round2",
    "bler_round3",
    "bler_round4",
    "expected_rounds",
    "rho",
    "scenario2_fraction",
    "scenario2_fraction_se",
    "slots_dmrs_only",
    "slots_all_re",
    "rmse_range_dmrs_only_m",
    "rmse_range_all_re_m",
    "rmse_doppler_dmrs_only_hz",
    "rmse_doppler_all_re_hz",
    "mse_range_dmrs_only_se",
    "mse_range_all_re_se",
    "mse_doppler_dmrs_only_se",
    "mse_doppler_all_re_se",
    "crlb_range_dmrs_only_m",
    "crlb_range_all_re_m",
    "crlb_range_mixture_m",
    "crlb_doppler_dmrs_only_hz",
    "crlb_doppler_all_re_hz",
    "crlb_doppler_mixture_hz",
];

pub fn csv_header() -> String {
    CSV_COLUMNS.join(",")
}

/// Nine significant digits.
pub fn format_real(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:.8e}")
    }
}

enum Cell {
    Int(u64),
    Real(f64),
}

fn row_cells(p: &CampaignPoint) -> Vec<Cell> {
    use Cell::{Int, Real};
    vec![
        Int(p.mcs as u64),
        Int(p.dmrs_additional_position as u64),
        Real(p.snr1_db),
        Real(p.snrc_db),
        Int(p.trials as u64),
        Int(p.transport_blocks as u64),
        Int(p.payload_bits as u64),
        Int(p.num_data_res as u64),
        Real(p.rmse_range_m),
        Real(p.rmse_doppler_hz),
        Real(p.mse_range_se),
        Real(p.mse_doppler_se),
        Real(p.throughput_bits_per_slot),
        Real(p.throughput_se),
        Real(p.throughput_analytic),
        Real(p.bler_round[0]),
        Real(p.bler_round[1]),
        Real(p.bler_round[2]),
        Real(p.bler_round[3]),
        Real(p.expected_rounds),
        Real(p.rho),
        Real(p.scenario2_fraction),
        Real(p.scenario2_fraction_se),
        Int(p.dmrs_only.slots as u64),
        Int(p.all_re.slots as u64),
        Real(p.dmrs_only.rmse_range_m),
        Real(p.all_re.rmse_range_m),
        Real(p.dmrs_only.rmse_doppler_hz),
        Real(p.all_re.rmse_doppler_hz),
        Real(p.dmrs_only.mse_range_se),
        Real(p.all_re.mse_range_se),
        Real(p.dmrs_only.mse_doppler_se),
        Real(p.all_re.mse_doppler_se),
        Real(p.crlb_range_m.dmrs_only),
        Real(p.crlb_range_m.all_re),
        Real(p.crlb_range_m.mixture),
        Real(p.crlb_doppler_hz.dmrs_only),
        Real(p.crlb_doppler_hz.all_re),
        Real(p.crlb_doppler_hz.mixture),
    ]
}

pub fn to_csv(result: &CampaignResult) -> String {
    let mut out = csv_header();
    out.push('\n');
    for p in &result.points {
        let cells: Vec<String> = row_cells(p)
            .into_iter()
            .map(|c| match c {
                Cell::Int(i) => i.to_string(),
                Cell::Real(r) => format_real(r),
            })
            .collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

pub const CRLB_COLUMNS: &[&str] = &[
    "mcs",
    "dmrs_additional_position",
    "snr1_db",
    "snrc_db",
    "rho",
    "crlb_range_dmrs_only_m",
    "crlb_range_all_re_m",
    "crlb_range_mixture_m",
    "crlb_doppler_dmrs_only_hz",
    "crlb_doppler_all_re_hz",
    "crlb_doppler_mixture_hz",
];

/// Bound table in the same number format as `results.csv`.
pub fn crlb_csv(rows: &[CrlbRow]) -> String {
    let mut out = CRLB_COLUMNS.join(",");
    out.push('\n');
    for r in rows {
        let reals = [
            r.snr1_db,
            r.snrc_db,
            r.rho,
            r.crlb_range_m.dmrs_only,
            r.crlb_range_m.all_re,
            r.crlb_range_m.mixture,
            r.crlb_doppler_hz.dmrs_only,
            r.crlb_doppler_hz.all_re,
            r.crlb_doppler_hz.mixture,
        ];
        let _ = write!(out, "{},{}", r.mcs, r.dmrs_additional_position);
        for v in reals {
            let _ = write!(out, ",{}", format_real(v));
        }
        out.push('\n');
    }
    out
}

pub fn to_json(result: &CampaignResult) -> Result<String> {
    let mut s = serde_json::to_string_pretty(result)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json(text: &str) -> Result<CampaignResult> {
    Ok(serde_json::from_str(text)?)
}

pub fn read_results(path: &Path) -> Result<CampaignResult> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    from_json(&text).map_err(|e| Error::Config(format!("{} is not a campaign result: {e}", path.display())))
}

/// Write `results.csv` and `results.json` into `dir`, creating it if needed.
pub fn emit_results(result: &CampaignResult, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let csv = dir.join("results.csv");
    let json = dir.join("results.json");
    fs::write(&csv, to_csv(result))?;
    fs::write(&json, to_json(result)?)?;
    Ok((csv, json))
}

/// Serde adapter for reals that may be non-finite. Finite values are plain
/// numbers; NaN and infinities are written as the strings `"NaN"`, `"inf"`,
/// `"-inf"`. Reading also accepts `null` as NaN.
pub mod nonfinite {
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    fn parse<E: serde::de::Error>(r: Option<Repr>) -> Result<f64, E> {
        match r {
            None => Ok(f64::NAN),
            Some(Repr::Number(v)) => Ok(v),
            Some(Repr::Text(t)) => match t.as_str() {
                "NaN" | "nan" => Ok(f64::NAN),
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(E::custom(format!("expected a number, got `{other}`"))),
            },
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&super::format_real(*v))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        parse(Option::<Repr>::deserialize(d)?)
    }

    /// The same encoding applied elementwise to a list.
    pub mod vec {
        use serde::ser::SerializeSeq;
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
            struct Item(f64);
            impl serde::Serialize for Item {
                fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                    super::serialize(&self.0, s)
                }
            }
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for &x in v {
                seq.serialize_element(&Item(x))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            Vec::<Option<super::Repr>>::deserialize(d)?
                .into_iter()
                .map(super::parse)
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_real(3577.5), "3.57750000e3");
        assert_eq!(format_real(1.0 / 3.0), "3.33333333e-1");
        assert_eq!(format_real(0.0), "0.00000000e0");
        assert_eq!(format_real(f64::NAN), "NaN");
        assert_eq!(format_real(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn header_lists_every_column_once() {
        let h = csv_header();
        let cols: Vec<&str> = h.split(',').collect();
        assert_eq!(cols.len(), CSV_COLUMNS.len());
        let unique: std::collections::HashSet<_> = cols.iter().collect();
        assert_eq!(unique.len(), cols.len());
        assert_eq!(cols[0], "mcs");
        assert_eq!(*cols.last().unwrap(), "crlb_doppler_mixture_hz");
    }

    #[derive(Debug, PartialEq, serde::Serialize, serde::Deserialize)]
    struct Probe {
        #[serde(with = "nonfinite")]
        x: f64,
        #[serde(with = "nonfinite::vec")]
        v: Vec<f64>,
    }

    #[test]
    fn nonfinite_values_round_trip_through_json_and_toml() {
        let p = Probe {
            x: f64::INFINITY,
            v: vec![1.5, f64::NEG_INFINITY],
        };
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, r#"{"x":"inf","v":[1.5,"-inf"]}"#);
        assert_eq!(serde_json::from_str::<Probe>(&json).unwrap(), p);
        let back: Probe = toml::from_str("x = inf\nv = [1.5, -inf]").unwrap();
        assert_eq!(back, p);
        let nan: Probe = serde_json::from_str(r#"{"x":null,"v":[]}"#).unwrap();
        assert!(nan.x.is_nan());
    }
}

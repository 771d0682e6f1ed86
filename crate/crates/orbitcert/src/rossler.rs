//! The Rössler system and the four built-in case studies: parameter
//! presets, grid datasets and printed orbit enclosures, shipped as JSON
//! under `data/` and embedded here.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{ContractingGridSpec, GridError, GridFile};
use crate::interval::{IBox, Interval, IntervalError};
use crate::polyfield::PolyField;

#[derive(Debug, Error)]
pub enum RosslerError {
    #[error("unknown case key {0:?} (available: {keys:?})", keys = CASE_KEYS)]
    UnknownCase(String),
    #[error("dataset literal: {0}")]
    Literal(#[from] IntervalError),
    #[error("dataset grid: {0}")]
    Grid(#[from] GridError),
    #[error("dataset json: {0}")]
    Json(String),
}

/// System parameters; `a` is an exact decimal, `b` is fixed at 0.2.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RosslerParams {
    pub a: String,
}

impl RosslerParams {
    pub fn new(a: &str) -> RosslerParams {
        RosslerParams { a: a.to_string() }
    }

    pub fn a_interval(&self) -> Result<Interval, IntervalError> {
        Interval::from_decimal_str(&self.a)
    }
}

/// The vector field `x' = -y - z, y' = 0.2 y + x, z' = x z - a z + 0.2`
/// with exactly enclosed coefficients.
pub fn rossler_field(p: &RosslerParams) -> Result<PolyField, IntervalError> {
    let neg_a = if let Some(stripped) = p.a.strip_prefix('-') {
        stripped.to_string()
    } else {
        format!("-{}", p.a)
    };
    PolyField::from_decimal_terms(
        3,
        &[
            vec![("-1", vec![0, 1, 0]), ("-1", vec![0, 0, 1])],
            vec![("0.2", vec![0, 1, 0]), ("1", vec![1, 0, 0])],
            vec![
                ("1", vec![1, 0, 1]),
                (neg_a.as_str(), vec![0, 0, 1]),
                ("0.2", vec![0, 0, 0]),
            ],
        ],
    )
}

/// Printed orbit enclosures in the section coordinates `(y, z)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrbitBoxFile {
    pub y: [String; 2],
    pub z: [String; 2],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrbitFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<String>,
    pub period: usize,
    pub boxes: Vec<OrbitBoxFile>,
}

impl OrbitFile {
    pub fn parse(json: &str) -> Result<OrbitFile, RosslerError> {
        serde_json::from_str(json).map_err(|e| RosslerError::Json(e.to_string()))
    }

    /// Interval boxes in `(y, z)`.
    pub fn to_boxes(&self) -> Result<Vec<IBox>, IntervalError> {
        let mut out = Vec::with_capacity(self.boxes.len());
        for b in &self.boxes {
            out.push(IBox(vec![
                Interval::from_decimal_bounds(&b.y[0], &b.y[1])?,
                Interval::from_decimal_bounds(&b.z[0], &b.z[1])?,
            ]));
        }
        Ok(out)
    }
}

/// One parameter value with its verified dataset.
#[derive(Clone, Debug)]
pub struct CaseStudy {
    pub key: String,
    pub params: RosslerParams,
    /// Period of the attracting orbit the grid encloses.
    pub period: usize,
    pub grid_file: GridFile,
    pub orbit_file: Option<OrbitFile>,
    /// Ambient region the verified dynamics must stay inside.
    pub trust_region: IBox,
}

pub const CASE_KEYS: [&str; 4] = ["5.25", "4.7", "4.381", "5.42"];

const GRID_5_25: &str = include_str!("../data/grid_5.25.json");
const GRID_4_7: &str = include_str!("../data/grid_4.7.json");
const GRID_4_381: &str = include_str!("../data/grid_4.381.json");
const GRID_5_42: &str = include_str!("../data/grid_5.42.json");
const ORBIT_4_381: &str = include_str!("../data/orbit_4.381.json");
const ORBIT_5_42: &str = include_str!("../data/orbit_5.42.json");

/// Raw dataset text for a case (grid json, orbit json), for hashing and
/// re-emission.
pub fn case_dataset_text(key: &str) -> Option<(&'static str, Option<&'static str>)> {
    match key {
        "5.25" => Some((GRID_5_25, None)),
        "4.7" => Some((GRID_4_7, None)),
        "4.381" => Some((GRID_4_381, Some(ORBIT_4_381))),
        "5.42" => Some((GRID_5_42, Some(ORBIT_5_42))),
        _ => None,
    }
}

pub fn builtin_case(key: &str) -> Result<CaseStudy, RosslerError> {
    let (grid_text, orbit_text) =
        case_dataset_text(key).ok_or_else(|| RosslerError::UnknownCase(key.to_string()))?;
    let grid_file = GridFile::parse(grid_text)?;
    let orbit_file = match orbit_text {
        Some(t) => Some(OrbitFile::parse(t)?),
        None => None,
    };
    let period = grid_file.cubes.len();
    let params = RosslerParams {
        a: grid_file.params.a.clone(),
    };
    Ok(CaseStudy {
        key: key.to_string(),
        params,
        period,
        grid_file,
        orbit_file,
        trust_region: default_trust_region(),
    })
}

/// Generous bounding box around the attractor for all four cases; leaving
/// it makes a verification inconclusive.
pub fn default_trust_region() -> IBox {
    IBox(vec![
        Interval::new(-16.0, 16.0),
        Interval::new(-16.0, 12.0),
        Interval::new(-1.0, 32.0),
    ])
}

impl CaseStudy {
    pub fn field(&self) -> Result<PolyField, RosslerError> {
        Ok(rossler_field(&self.params)?)
    }

    pub fn grid_spec(&self) -> Result<ContractingGridSpec, RosslerError> {
        Ok(self.grid_file.to_spec()?)
    }

    pub fn orbit_boxes(&self) -> Result<Option<Vec<IBox>>, RosslerError> {
        match &self.orbit_file {
            Some(f) => Ok(Some(f.to_boxes().map_err(RosslerError::Literal)?)),
            None => Ok(None),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_at_origin() {
        let f = rossler_field(&RosslerParams::new("5.25")).unwrap();
        let v = f.eval(&IBox::from_points(&[0.0, 0.0, 0.0]));
        assert!(v.0[0].contains(0.0) && v.0[1].contains(0.0));
        let fifth = num_rational::BigRational::new(1.into(), 5.into());
        let (lo, hi) = v.0[2].to_rationals().unwrap();
        assert!(lo <= fifth && fifth <= hi);
    }

    #[test]
    fn field_at_a00() {
        let f = rossler_field(&RosslerParams::new("5.25")).unwrap();
        let v = f.eval(&IBox::from_points(&[5.25, 0.0, 0.0]));
        assert!(v.0[0].contains(0.0));
        assert!(v.0[1].contains(5.25));
        assert!(v.0[2].contains(0.2) && v.0[2].width() < 1e-15);
    }

    #[test]
    fn jacobian_at_origin() {
        let f = rossler_field(&RosslerParams::new("5.25")).unwrap();
        let j = f.jacobian_eval(&IBox::from_points(&[0.0, 0.0, 0.0]));
        let expect = [[0.0, -1.0, -1.0], [1.0, 0.2, 0.0], [0.0, 0.0, -5.25]];
        for i in 0..3 {
            for k in 0..3 {
                assert!(j[(i, k)].contains(expect[i][k]), "({i},{k}): {:?}", j[(i, k)]);
                assert!(j[(i, k)].width() < 1e-14);
            }
        }
    }

    #[test]
    fn builtin_cases_parse() {
        for key in CASE_KEYS {
            let c = builtin_case(key).unwrap();
            let spec = c.grid_spec().unwrap();
            assert!(spec.cubes.len() >= 3);
            assert_eq!(spec.cubes.len(), c.period);
        }
        assert!(builtin_case("9.99").is_err());
    }

    #[test]
    fn first_case_outer_values() {
        let c = builtin_case("5.25").unwrap();
        let spec = c.grid_spec().unwrap();
        assert!(spec.outer.center.0[0].contains(-6.38401));
        assert!(spec.outer.center.0[1].contains(0.0327544));
        assert!(spec.outer.radii.0[0].contains(3.63687));
        assert!(spec.outer.radii.0[1].contains(0.0004));
    }

    #[test]
    fn dataset_roundtrip_identical_endpoints() {
        for key in CASE_KEYS {
            let c = builtin_case(key).unwrap();
            let spec = c.grid_spec().unwrap();
            let re = serde_json::to_string(&c.grid_file).unwrap();
            let spec2 = GridFile::parse(&re).unwrap().to_spec().unwrap();
            assert_eq!(spec.outer, spec2.outer, "{key}");
            for (a, b) in spec.cubes.iter().zip(&spec2.cubes) {
                assert_eq!(a, b, "{key}");
            }
            if let Some(orbit) = &c.orbit_file {
                let re = serde_json::to_string(orbit).unwrap();
                let o2 = OrbitFile::parse(&re).unwrap();
                assert_eq!(orbit.to_boxes().unwrap(), o2.to_boxes().unwrap());
            }
        }
    }

    #[test]
    fn grid_sanity_cube_centers_inside_outer() {
        for key in CASE_KEYS {
            let c = builtin_case(key).unwrap();
            let spec = c.grid_spec().unwrap();
            for (i, cube) in spec.cubes.iter().enumerate() {
                let u = spec.outer.to_model_coords(&cube.center).unwrap();
                let m = spec.outer.interior_margin_model(&u);
                assert!(m > 0.0, "{key} cube {} center outside outer: margin {m}", i + 1);
            }
        }
    }

    #[test]
    fn orbit_boxes_inside_their_cubes() {
        for key in ["4.381", "5.42"] {
            let c = builtin_case(key).unwrap();
            let spec = c.grid_spec().unwrap();
            let boxes = c.orbit_boxes().unwrap().unwrap();
            assert_eq!(boxes.len(), spec.cubes.len());
            for (i, (b, cube)) in boxes.iter().zip(&spec.cubes).enumerate() {
                let u = cube.to_model_coords(b).unwrap();
                let m = cube.interior_margin_model(&u);
                assert!(m > 0.0, "{key} orbit box {} outside cube: {m}", i + 1);
                let ug = spec.outer.to_model_coords(b).unwrap();
                let mg = spec.outer.interior_margin_model(&ug);
                assert!(mg > 0.0, "{key} orbit box {} outside outer: {mg}", i + 1);
            }
        }
    }

    #[test]
    fn spatial_patterns_of_cases() {
        // reflections of these are equivalent; the extraction orders by
        // the outer chart's first column
        let expect = [
            ("5.25", "2,3,1"),
            ("4.7", "3,5,4,2,1"),
            ("4.381", "4,6,5,3,2,1"),
            ("5.42", "3,4,5,6,2,1"),
        ];
        for (key, pat) in expect {
            let c = builtin_case(key).unwrap();
            let p = c.grid_spec().unwrap().spatial_pattern().unwrap();
            assert_eq!(p.to_image_list(), pat, "case {key}");
        }
    }

    /// Digit-expansion review table: the compact printed forms next to the
    /// expanded bounds shipped in the dataset.
    #[test]
    fn orbit_digit_expansion_review() {
        // (prefix, low suffix, high suffix, expanded low, expanded high)
        let rows = [
            ("-7.448265140", "33532", "244187", "-7.44826514033532", "-7.448265140244187"),
            ("-5.432682771", "276081", "080253", "-5.432682771276081", "-5.432682771080253"),
            ("-8.146150765", "219835", "118602", "-8.146150765219835", "-8.146150765118602"),
            ("-4.05248247", "1003891", "0816507", "-4.052482471003891", "-4.052482470816507"),
            ("-6.98865159", "7169091", "6889441", "-6.988651597169091", "-6.988651596889441"),
            ("-6.38538092", "5198882", "4637889", "-6.385380925198882", "-6.385380924637889"),
            ("-3.3303887279", "60296", "4934", "-3.330388727960296", "-3.33038872794934"),
            ("-6.0438781482", "33535", "13811", "-6.043878148233535", "-6.043878148213811"),
            ("-9.930004688", "71182", "693574", "-9.93000468871182", "-9.930004688693574"),
            ("-3.561109751", "505439", "469876", "-3.561109751505439", "-3.561109751469876"),
            ("-6.450138010", "324274", "261234", "-6.450138010324274", "-6.450138010261234"),
            ("-10.061811798", "91221", "88145", "-10.06181179891221", "-10.06181179888145"),
        ];
        for (prefix, lo_sfx, hi_sfx, lo, hi) in rows {
            let build = |sfx: &str| format!("{prefix}{sfx}");
            let norm = |s: &str| crate::interval::parse_decimal_rational(s).unwrap();
            assert_eq!(norm(&build(lo_sfx)), norm(lo));
            assert_eq!(norm(&build(hi_sfx)), norm(hi));
            assert!(norm(lo) < norm(hi), "{lo} !< {hi}");
        }
    }
}

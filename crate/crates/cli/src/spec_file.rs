//! The JSON contest description read by every subcommand.

use std::path::Path;
use std::sync::Arc;

use csf_lab::{Backend, CustomImpact, Family, ImpactFn, ImpactSpec, PiecewiseLinear};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    LuckTullock,
    Tullock,
    LinearHeadstart,
    SymmetricLuck,
    Ratio,
    CustomTable,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendName {
    #[default]
    Float64,
    Rational,
}

impl From<BackendName> for Backend {
    fn from(b: BackendName) -> Backend {
        match b {
            BackendName::Float64 => Backend::Float64,
            BackendName::Rational => Backend::ExactRational,
        }
    }
}

/// A contest as written on disk.
///
/// `custom_table` holds either one breakpoint table shared by everyone or one
/// table per contestant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContestSpecFile {
    pub n: usize,
    pub family: FamilyName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_scalar: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom_table: Option<Vec<Vec<(f64, f64)>>>,
    #[serde(default)]
    pub backend: BackendName,
}

/// A validated spec file.
#[derive(Clone, Debug)]
pub struct LoadedSpec {
    pub spec: ImpactSpec,
    pub n: usize,
    pub backend: Backend,
}

fn need<T: Clone>(v: &Option<T>, field: &str, family: FamilyName) -> Result<T, String> {
    v.clone()
        .ok_or_else(|| format!("family {} needs `{field}`", family_str(family)))
}

fn family_str(f: FamilyName) -> String {
    serde_json::to_value(f)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

fn check_len(field: &str, v: &[f64], n: usize) -> Result<(), String> {
    if v.len() == n {
        Ok(())
    } else {
        Err(format!("`{field}` has {} entries but n = {n}", v.len()))
    }
}

impl ContestSpecFile {
    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("bad spec file: {e}"))
    }

    pub fn read(path: &Path) -> Result<Self, String> {
        let text =
            std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec files always serialize")
    }

    fn reject_unused(&self) -> Result<(), String> {
        let used: &[&str] = match self.family {
            FamilyName::LuckTullock => &["a", "b", "r"],
            FamilyName::Tullock => &["a", "r"],
            FamilyName::LinearHeadstart => &["b"],
            FamilyName::SymmetricLuck => &["b_scalar", "r"],
            FamilyName::Ratio => &[],
            FamilyName::CustomTable => &["custom_table"],
        };
        let present = [
            ("a", self.a.is_some()),
            ("b", self.b.is_some()),
            ("r", self.r.is_some()),
            ("b_scalar", self.b_scalar.is_some()),
            ("custom_table", self.custom_table.is_some()),
        ];
        for (field, set) in present {
            if set && !used.contains(&field) {
                return Err(format!(
                    "`{field}` is not a parameter of family {}",
                    family_str(self.family)
                ));
            }
        }
        Ok(())
    }

    /// Validate and build the spec.
    pub fn load(&self) -> Result<LoadedSpec, String> {
        self.reject_unused()?;
        let n = self.n;
        let fam = self.family;
        let spec = match fam {
            FamilyName::LuckTullock => {
                let (a, b) = (need(&self.a, "a", fam)?, need(&self.b, "b", fam)?);
                check_len("a", &a, n)?;
                check_len("b", &b, n)?;
                ImpactSpec::power_plus_constant(a, b, need(&self.r, "r", fam)?)
            }
            FamilyName::Tullock => {
                let a = need(&self.a, "a", fam)?;
                check_len("a", &a, n)?;
                ImpactSpec::tullock(a, need(&self.r, "r", fam)?)
            }
            FamilyName::LinearHeadstart => {
                let b = need(&self.b, "b", fam)?;
                check_len("b", &b, n)?;
                ImpactSpec::linear(b)
            }
            FamilyName::SymmetricLuck => {
                ImpactSpec::symmetric_luck(need(&self.b_scalar, "b_scalar", fam)?, need(&self.r, "r", fam)?)
            }
            FamilyName::Ratio => Ok(ImpactSpec::ratio()),
            FamilyName::CustomTable => {
                let tables = need(&self.custom_table, "custom_table", fam)?;
                if tables.len() != 1 && tables.len() != n {
                    return Err(format!(
                        "`custom_table` needs one shared table or {n}, got {}",
                        tables.len()
                    ));
                }
                let fns = tables
                    .into_iter()
                    .map(|t| PiecewiseLinear::new(t).map(|p| Arc::new(p) as Arc<dyn ImpactFn>))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| e.to_string())?;
                let custom = if fns.len() == 1 {
                    CustomImpact::shared("table", fns.into_iter().next().expect("one table"))
                } else {
                    CustomImpact::per_contestant("table", fns)
                };
                custom.map(ImpactSpec::custom)
            }
        }
        .map_err(|e| e.to_string())?;
        spec.check_arity(n).map_err(|e| e.to_string())?;
        let backend = Backend::from(self.backend);
        if backend == Backend::ExactRational {
            backend.available().map_err(|e| e.to_string())?;
            if !spec.supports_exact() {
                return Err(match spec.r() {
                    Some(r) => format!("the rational backend needs an integer r, got {r}"),
                    None => format!("the rational backend does not support family {}", spec.name()),
                });
            }
        }
        Ok(LoadedSpec { spec, n, backend })
    }

    /// The file describing a loaded spec.
    pub fn describe(loaded: &LoadedSpec) -> Result<Self, String> {
        let mut file = ContestSpecFile {
            n: loaded.n,
            family: FamilyName::Ratio,
            a: None,
            b: None,
            r: None,
            b_scalar: None,
            custom_table: None,
            backend: match loaded.backend {
                Backend::Float64 => BackendName::Float64,
                Backend::ExactRational => BackendName::Rational,
            },
        };
        match loaded.spec.family() {
            Family::PowerPlusConstant { a, b, r } => {
                file.family = FamilyName::LuckTullock;
                (file.a, file.b, file.r) = (Some(a.clone()), Some(b.clone()), Some(*r));
            }
            Family::Tullock { a, r } => {
                file.family = FamilyName::Tullock;
                (file.a, file.r) = (Some(a.clone()), Some(*r));
            }
            Family::Linear { b } => {
                file.family = FamilyName::LinearHeadstart;
                file.b = Some(b.clone());
            }
            Family::SymmetricLuck { b, r } => {
                file.family = FamilyName::SymmetricLuck;
                (file.b_scalar, file.r) = (Some(*b), Some(*r));
            }
            Family::Ratio => {}
            Family::Custom(c) => {
                file.family = FamilyName::CustomTable;
                let tables = c
                    .functions()
                    .iter()
                    .map(|f| f.table().map(<[_]>::to_vec))
                    .collect::<Option<Vec<_>>>()
                    .ok_or("custom impact is not a breakpoint table")?;
                file.custom_table = Some(tables);
            }
        }
        Ok(file)
    }
}

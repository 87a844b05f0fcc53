//! Flat descriptions of channels, constraints, states, and check reports in
//! a JSON-compatible shape, shared between the library and the command line
//! front end. Complex matrices appear as row lists of `[re, im]` pairs, and
//! reports serialize to one object per line so runs can stream.

use serde::{Deserialize, Serialize};

use crate::additivity::GapReport;
use crate::channel::{BlockChannel, ChannelFamily, KrausChannel};
use crate::constraint::ConstraintSet;
use crate::error::{Error, Result};
use crate::mat::ComplexMatrix;
use crate::opt::objective::C64;
use crate::shor::ShorExtension;
use crate::shor_cap::Prop3Report;
use crate::state::{DensityMatrix, Ensemble, HermitianOperator};

/// Complex matrix literal: rows of `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatrixLit(pub Vec<Vec<[f64; 2]>>);

impl MatrixLit {
    pub fn of_matrix(m: &ComplexMatrix<f64>) -> Self {
        MatrixLit(
            (0..m.rows())
                .map(|i| (0..m.cols()).map(|j| [m.get(i, j).re, m.get(i, j).im]).collect())
                .collect(),
        )
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix<f64>> {
        let rows = self.0.len();
        if rows == 0 {
            return Err(Error::invalid("matrix literal has no rows"));
        }
        let cols = self.0[0].len();
        if cols == 0 || self.0.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("matrix literal rows must be nonempty and equal length"));
        }
        let mut m = ComplexMatrix::zeros(rows, cols);
        for (i, row) in self.0.iter().enumerate() {
            for (j, &[re, im]) in row.iter().enumerate() {
                if !re.is_finite() || !im.is_finite() {
                    return Err(Error::invalid("matrix literal entries must be finite"));
                }
                m.set(i, j, C64::new(re, im));
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.0.len()
    }

    pub fn to_density(&self) -> Result<DensityMatrix<f64>> {
        DensityMatrix::new(self.to_matrix()?)
    }

    pub fn to_effect(&self) -> Result<HermitianOperator<f64>> {
        let op = HermitianOperator::new(self.to_matrix()?)?;
        if !op.is_effect() {
            return Err(Error::invalid("operator literal is not an effect"));
        }
        Ok(op)
    }
}

/// Channel description: a named family with numeric parameters, an explicit
/// Kraus list, or a direct sum of weighted blocks.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChannelRecord {
    Family {
        family: String,
        #[serde(default)]
        params: Vec<f64>,
    },
    Kraus { kraus: Vec<MatrixLit> },
    Blocks { blocks: Vec<BlockComponentRecord> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockComponentRecord {
    pub weight: f64,
    pub channel: ChannelRecord,
}

fn int_param(params: &[f64], k: usize, what: &str) -> Result<usize> {
    let v = *params
        .get(k)
        .ok_or_else(|| Error::invalid(format!("missing {what} parameter")))?;
    if !v.is_finite() || v < 0.0 || v.fract() != 0.0 {
        return Err(Error::invalid(format!("{what} parameter must be a nonnegative integer")));
    }
    Ok(v as usize)
}

impl ChannelRecord {
    pub fn of_channel(ch: &KrausChannel<f64>) -> Self {
        let named = |family: &str, params: Vec<f64>| ChannelRecord::Family {
            family: family.to_string(),
            params,
        };
        match ch.family() {
            ChannelFamily::Noiseless => named("noiseless", vec![ch.din() as f64]),
            ChannelFamily::Trivial => named("trivial", vec![]),
            ChannelFamily::Depolarizing { p } => named("depolarizing", vec![*p, ch.din() as f64]),
            ChannelFamily::CompletelyDepolarizing => {
                named("completely_depolarizing", vec![ch.din() as f64])
            }
            _ => ChannelRecord::Kraus {
                kraus: ch.kraus_ops().iter().map(MatrixLit::of_matrix).collect(),
            },
        }
    }

    pub fn of_block(bc: &BlockChannel<f64>) -> Self {
        ChannelRecord::Blocks {
            blocks: bc
                .components()
                .iter()
                .map(|(w, ch)| BlockComponentRecord {
                    weight: *w,
                    channel: ChannelRecord::of_channel(ch),
                })
                .collect(),
        }
    }

    pub fn to_channel(&self) -> Result<KrausChannel<f64>> {
        match self {
            ChannelRecord::Family { family, params } => match family.as_str() {
                "noiseless" => KrausChannel::noiseless(int_param(params, 0, "dimension")?),
                "trivial" => Ok(KrausChannel::trivial()),
                "depolarizing" => {
                    let p = *params
                        .first()
                        .ok_or_else(|| Error::invalid("missing depolarizing probability"))?;
                    KrausChannel::depolarizing(p, int_param(params, 1, "dimension")?)
                }
                "completely_depolarizing" => {
                    KrausChannel::completely_depolarizing(int_param(params, 0, "dimension")?)
                }
                other => Err(Error::invalid(format!(
                    "unknown channel family {other:?}; known: noiseless, trivial, depolarizing, completely_depolarizing"
                ))),
            },
            ChannelRecord::Kraus { kraus } => {
                let ops = kraus.iter().map(|m| m.to_matrix()).collect::<Result<Vec<_>>>()?;
                KrausChannel::new(ops, ChannelFamily::General)
            }
            ChannelRecord::Blocks { .. } => Err(Error::Unsupported(
                "direct sum record describes a block channel; use to_block_channel".to_string(),
            )),
        }
    }

    pub fn to_block_channel(&self) -> Result<BlockChannel<f64>> {
        match self {
            ChannelRecord::Blocks { blocks } => {
                let components = blocks
                    .iter()
                    .map(|b| Ok((b.weight, b.channel.to_channel()?)))
                    .collect::<Result<Vec<_>>>()?;
                BlockChannel::new(components)
            }
            _ => BlockChannel::new(vec![(1.0, self.to_channel()?)]),
        }
    }
}

/// Constraint description, tagged by kind. Marginal records carry the two
/// factor constraints; the factor dimensions are recovered from whichever
/// side names a concrete operator.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ConstraintRecord {
    Full,
    Linear {
        #[serde(rename = "A")]
        a: MatrixLit,
        alpha: f64,
    },
    Singleton { rho: MatrixLit },
    Marginals {
        left: Box<ConstraintRecord>,
        right: Box<ConstraintRecord>,
    },
}

impl ConstraintRecord {
    pub fn of_constraint(c: &ConstraintSet<f64>) -> Self {
        match c {
            ConstraintSet::Full => ConstraintRecord::Full,
            ConstraintSet::Linear { effect, alpha } => ConstraintRecord::Linear {
                a: MatrixLit::of_matrix(effect.matrix()),
                alpha: *alpha,
            },
            ConstraintSet::Singleton { state } => ConstraintRecord::Singleton {
                rho: MatrixLit::of_matrix(state.matrix()),
            },
            ConstraintSet::Marginals { left, right, .. } => ConstraintRecord::Marginals {
                left: Box::new(ConstraintRecord::of_constraint(left)),
                right: Box::new(ConstraintRecord::of_constraint(right)),
            },
        }
    }

    /// Dimension pinned by the record itself, if any.
    pub fn dim_hint(&self) -> Option<usize> {
        match self {
            ConstraintRecord::Full => None,
            ConstraintRecord::Linear { a, .. } => Some(a.rows()),
            ConstraintRecord::Singleton { rho } => Some(rho.rows()),
            ConstraintRecord::Marginals { left, right } => {
                Some(left.dim_hint()? * right.dim_hint()?)
            }
        }
    }

    /// Build the constraint for a channel with input dimension `din`,
    /// validating every embedded operator against it.
    pub fn to_constraint(&self, din: usize) -> Result<ConstraintSet<f64>> {
        match self {
            ConstraintRecord::Full => Ok(ConstraintSet::Full),
            ConstraintRecord::Linear { a, alpha } => {
                let op = HermitianOperator::new(a.to_matrix()?)?;
                if op.dim() != din {
                    return Err(Error::dims(format!(
                        "constraint operator dim {} does not match input dim {din}",
                        op.dim()
                    )));
                }
                ConstraintSet::linear(op, *alpha)
            }
            ConstraintRecord::Singleton { rho } => {
                let state = rho.to_density()?;
                if state.dim() != din {
                    return Err(Error::dims(format!(
                        "pinned state dim {} does not match input dim {din}",
                        state.dim()
                    )));
                }
                Ok(ConstraintSet::singleton(state))
            }
            ConstraintRecord::Marginals { left, right } => {
                let (dl, dr) = match (left.dim_hint(), right.dim_hint()) {
                    (Some(dl), _) if din % dl == 0 => (dl, din / dl),
                    (_, Some(dr)) if din % dr == 0 => (din / dr, dr),
                    (Some(_), _) | (_, Some(_)) => {
                        return Err(Error::dims(
                            "marginal factor dimension does not divide the input dimension",
                        ))
                    }
                    (None, None) => {
                        return Err(Error::invalid(
                            "marginal factor dimensions cannot be inferred; give at least one side a concrete operator",
                        ))
                    }
                };
                ConstraintSet::marginals(
                    left.to_constraint(dl)?,
                    right.to_constraint(dr)?,
                    (dl, dr),
                )
            }
        }
    }
}

/// Ensemble description: probabilities with matching state literals.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnsembleRecord {
    pub weights: Vec<f64>,
    pub states: Vec<MatrixLit>,
}

impl EnsembleRecord {
    pub fn of_ensemble(e: &Ensemble<f64>) -> Self {
        EnsembleRecord {
            weights: e.weights().to_vec(),
            states: e.states().iter().map(|s| MatrixLit::of_matrix(s.matrix())).collect(),
        }
    }

    pub fn to_ensemble(&self) -> Result<Ensemble<f64>> {
        let states = self.states.iter().map(|m| m.to_density()).collect::<Result<Vec<_>>>()?;
        Ensemble::new(self.weights.clone(), states)
    }
}

/// Classically assisted extension description: the base channel, the effect
/// steering the measured branch, the branch weight, and the index size.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExtensionRecord {
    pub base: ChannelRecord,
    pub effect: MatrixLit,
    pub q: f64,
    pub d: usize,
}

impl ExtensionRecord {
    pub fn of_extension(x: &ShorExtension<f64>) -> Self {
        ExtensionRecord {
            base: ChannelRecord::of_channel(x.base()),
            effect: MatrixLit::of_matrix(x.effect().matrix()),
            q: x.q(),
            d: x.index_count(),
        }
    }

    pub fn to_extension(&self) -> Result<ShorExtension<f64>> {
        let base = self.base.to_channel()?;
        let effect = self.effect.to_effect()?;
        ShorExtension::new(base, effect, self.q, self.d)
    }
}

/// One check outcome as emitted on the wire. Settled relations carry a
/// `pass` field and may fail a run; open conjectures carry `report` instead,
/// recording the observed sign without asserting it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportRecord {
    pub quantity: String,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<bool>,
    pub instance: String,
    pub seed: u64,
}

impl ReportRecord {
    pub fn of_gap(g: &GapReport) -> Self {
        ReportRecord {
            quantity: g.quantity.to_string(),
            lhs: g.lhs,
            rhs: g.rhs,
            gap: g.gap,
            tolerance: g.tolerance,
            pass: g.proven.then_some(g.pass),
            report: (!g.proven).then_some(g.pass),
            instance: g.instance.clone(),
            seed: g.seed,
        }
    }

    pub fn of_prop3(r: &Prop3Report, instance: String, seed: u64) -> Self {
        ReportRecord {
            quantity: "prop3_check".to_string(),
            lhs: r.lhs,
            rhs: r.rhs,
            gap: r.rhs - r.lhs,
            tolerance: r.bound,
            pass: Some(r.pass),
            report: None,
            instance,
            seed,
        }
    }

    /// Observed outcome regardless of whether it is asserted.
    pub fn observed(&self) -> bool {
        self.pass.or(self.report).unwrap_or(false)
    }

    /// Whether this record can fail a run: a settled check that came out
    /// false.
    pub fn hard_fail(&self) -> bool {
        self.pass == Some(false)
    }
}

/// Serialize any record as a single line.
pub fn to_json_line<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string(v).map_err(|e| Error::invalid(format!("serialization failed: {e}")))
}

/// Parse one line into a record type.
pub fn from_json_line<'a, T: Deserialize<'a>>(line: &'a str) -> Result<T> {
    serde_json::from_str(line).map_err(|e| Error::invalid(format!("parse failed: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_channel, random_state};

    #[test]
    fn matrix_literal_round_trips_exactly() {
        let m = random_state::<f64>(3, 2, 41).unwrap().into_matrix();
        let lit = MatrixLit::of_matrix(&m);
        let line = to_json_line(&lit).unwrap();
        let back: MatrixLit = from_json_line(&line).unwrap();
        let m2 = back.to_matrix().unwrap();
        assert_eq!(m.sub(&m2).max_abs(), 0.0);
    }

    #[test]
    fn named_family_records_rebuild_the_channel() {
        let ch = KrausChannel::depolarizing(0.3, 2).unwrap();
        let rec = ChannelRecord::of_channel(&ch);
        let line = to_json_line(&rec).unwrap();
        assert!(line.contains("\"family\":\"depolarizing\""), "{line}");
        let back: ChannelRecord = from_json_line(&line).unwrap();
        let ch2 = back.to_channel().unwrap();
        for (a, b) in ch.kraus_ops().iter().zip(ch2.kraus_ops()) {
            assert!(a.sub(b).max_abs() <= 1e-15);
        }
    }

    #[test]
    fn kraus_records_round_trip_and_validate() {
        let ch = random_channel::<f64>(2, 2, 2, 43).unwrap();
        let rec = ChannelRecord::of_channel(&ch);
        let back: ChannelRecord = from_json_line(&to_json_line(&rec).unwrap()).unwrap();
        let ch2 = back.to_channel().unwrap();
        for (a, b) in ch.kraus_ops().iter().zip(ch2.kraus_ops()) {
            assert!(a.sub(b).max_abs() <= 1e-15);
        }
        // Non trace preserving Kraus lists are rejected at parse time.
        let half = MatrixLit(vec![vec![[0.5, 0.0], [0.0, 0.0]], vec![[0.0, 0.0], [0.5, 0.0]]]);
        let bad = ChannelRecord::Kraus { kraus: vec![half] };
        assert!(bad.to_channel().is_err());
    }

    #[test]
    fn block_records_rebuild_components() {
        let bc = BlockChannel::erasure(0.3, 2).unwrap();
        let rec = ChannelRecord::of_block(&bc);
        let back: ChannelRecord = from_json_line(&to_json_line(&rec).unwrap()).unwrap();
        let bc2 = back.to_block_channel().unwrap();
        assert_eq!(bc.components().len(), bc2.components().len());
        for ((w1, _), (w2, _)) in bc.components().iter().zip(bc2.components()) {
            assert_eq!(w1, w2);
        }
        // A plain record lifts to a single full-weight block.
        let single = ChannelRecord::Family { family: "noiseless".into(), params: vec![2.0] };
        assert_eq!(single.to_block_channel().unwrap().components().len(), 1);
    }

    #[test]
    fn constraint_records_carry_their_tag() {
        let full = to_json_line(&ConstraintRecord::Full).unwrap();
        assert_eq!(full, "{\"type\":\"full\"}");
        let rho = random_state::<f64>(2, 2, 45).unwrap();
        let lin = ConstraintRecord::Linear {
            a: MatrixLit::of_matrix(rho.matrix()),
            alpha: 0.4,
        };
        let line = to_json_line(&lin).unwrap();
        assert!(line.contains("\"type\":\"linear\"") && line.contains("\"A\":"), "{line}");
        let back: ConstraintRecord = from_json_line(&line).unwrap();
        assert!(matches!(back.to_constraint(2).unwrap(), ConstraintSet::Linear { .. }));
        assert!(back.to_constraint(3).is_err());
    }

    #[test]
    fn marginal_records_infer_factor_dims() {
        let rho = random_state::<f64>(2, 2, 47).unwrap();
        let rec = ConstraintRecord::Marginals {
            left: Box::new(ConstraintRecord::Singleton { rho: MatrixLit::of_matrix(rho.matrix()) }),
            right: Box::new(ConstraintRecord::Full),
        };
        let c = rec.to_constraint(6).unwrap();
        assert!(matches!(c, ConstraintSet::Marginals { dims: (2, 3), .. }));
        let blind = ConstraintRecord::Marginals {
            left: Box::new(ConstraintRecord::Full),
            right: Box::new(ConstraintRecord::Full),
        };
        assert!(blind.to_constraint(4).is_err());
    }

    #[test]
    fn ensemble_and_extension_records_validate() {
        let e = Ensemble::new(
            vec![0.5, 0.5],
            vec![random_state::<f64>(2, 1, 49).unwrap(), random_state::<f64>(2, 2, 50).unwrap()],
        )
        .unwrap();
        let rec = EnsembleRecord::of_ensemble(&e);
        let back: EnsembleRecord = from_json_line(&to_json_line(&rec).unwrap()).unwrap();
        assert_eq!(back.to_ensemble().unwrap().len(), 2);
        let bad = EnsembleRecord { weights: vec![0.7, 0.7], states: rec.states.clone() };
        assert!(bad.to_ensemble().is_err());

        let mut m = ComplexMatrix::zeros(2, 2);
        m.set(1, 1, C64::new(1.0, 0.0));
        let ext = ExtensionRecord {
            base: ChannelRecord::Family { family: "depolarizing".into(), params: vec![0.3, 2.0] },
            effect: MatrixLit::of_matrix(&m),
            q: 0.1,
            d: 4,
        };
        let x = ext.to_extension().unwrap();
        assert_eq!(x.index_count(), 4);
        let rec2 = ExtensionRecord::of_extension(&x);
        let back2: ExtensionRecord = from_json_line(&to_json_line(&rec2).unwrap()).unwrap();
        assert_eq!(back2.d, 4);
        let skew = ExtensionRecord { effect: MatrixLit::of_matrix(&ComplexMatrix::identity(3)), ..ext };
        assert!(skew.to_extension().is_err());
    }

    #[test]
    fn report_records_distinguish_asserted_from_observed() {
        let proven = GapReport {
            quantity: "prop2_noiseless_check",
            lhs: 1.0,
            rhs: 1.0,
            gap: 0.0,
            tolerance: 2e-3,
            proven: true,
            pass: true,
            lines: Vec::new(),
            converged: Vec::new(),
            instance: "x".into(),
            seed: 7,
        };
        let line = to_json_line(&ReportRecord::of_gap(&proven)).unwrap();
        assert!(line.contains("\"pass\":true") && !line.contains("report"), "{line}");
        assert!(!line.contains('\n'));

        let open = GapReport { proven: false, ..proven };
        let rec = ReportRecord::of_gap(&open);
        let line2 = to_json_line(&rec).unwrap();
        assert!(line2.contains("\"report\":true") && !line2.contains("\"pass\""), "{line2}");
        let back: ReportRecord = from_json_line(&line2).unwrap();
        assert!(back.observed() && !back.hard_fail());
    }
}

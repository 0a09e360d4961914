//! Follower-anonymity fractions per target account, a linear soft-margin SVM
//! separating sensitive from non-sensitive targets in that plane, and signed
//! distance scoring.

use std::cmp::Ordering;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::anonclf::FusedLabel;
use crate::error::{Error, Result};

/// Regularization used for the reference separator.
pub const DEFAULT_C: f64 = 5000.0;
/// Stopping tolerance on the maximal KKT violation.
pub const SVM_TOLERANCE: f64 = 1e-8;
const MAX_SVM_ITERATIONS: usize = 50_000_000;
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FollowerStats {
    pub account_id: String,
    pub n_followers: usize,
    /// Fraction of followers labeled Identifiable.
    pub x: f64,
    /// Fraction of followers labeled Anonymous.
    pub y: f64,
    pub unknown_fraction: f64,
}

/// Proportions of Identifiable (x), Anonymous (y) and Unknown followers.
pub fn follower_fractions(target_id: &str, follower_labels: &[FusedLabel]) -> Result<FollowerStats> {
    if follower_labels.is_empty() {
        return Err(Error::invalid(format!("{target_id}: no followers")));
    }
    let count = |l| follower_labels.iter().filter(|&&f| f == l).count();
    let n = follower_labels.len();
    let ident = count(FusedLabel::Identifiable);
    let anon = count(FusedLabel::Anonymous);
    let unknown = n - ident - anon;
    let nf = n as f64;
    Ok(FollowerStats {
        account_id: target_id.to_string(),
        n_followers: n,
        x: ident as f64 / nf,
        y: anon as f64 / nf,
        unknown_fraction: unknown as f64 / nf,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sensitivity {
    Sensitive,
    NonSensitive,
}

impl Sensitivity {
    pub fn as_str(self) -> &'static str {
        match self {
            Sensitivity::Sensitive => "Sensitive",
            Sensitivity::NonSensitive => "NonSensitive",
        }
    }

    fn sign(self) -> f64 {
        match self {
            Sensitivity::Sensitive => 1.0,
            Sensitivity::NonSensitive => -1.0,
        }
    }
}

impl std::fmt::Display for Sensitivity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Sensitivity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Sensitive" | "sensitive" | "true" => Ok(Sensitivity::Sensitive),
            "NonSensitive" | "non_sensitive" | "false" => Ok(Sensitivity::NonSensitive),
            _ => Err(Error::invalid(format!("unknown sensitivity {s:?}"))),
        }
    }
}

/// Separator `y = slope * x + intercept`; points strictly above are sensitive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperplane {
    pub slope: f64,
    pub intercept: f64,
    pub c: f64,
}

impl Default for Hyperplane {
    /// The separator fitted on the reference set of 67 hand-picked accounts.
    fn default() -> Self {
        Hyperplane {
            slope: 0.0575,
            intercept: 0.0078,
            c: DEFAULT_C,
        }
    }
}

impl Hyperplane {
    /// Converts `wx * x + wy * y + b = 0`, positive side sensitive, into
    /// slope/intercept form. The sensitive side must be the upper side.
    pub fn from_weights(wx: f64, wy: f64, b: f64, c: f64) -> Result<Self> {
        let norm = wx.hypot(wy);
        if !(norm.is_finite() && b.is_finite()) || norm == 0.0 {
            return Err(Error::DegenerateGeometry("zero or non-finite weight vector".into()));
        }
        if wy.abs() <= 1e-12 * norm {
            return Err(Error::DegenerateGeometry("separator is vertical".into()));
        }
        if wy < 0.0 {
            return Err(Error::DegenerateGeometry(
                "sensitive side lies below the separator".into(),
            ));
        }
        Ok(Hyperplane {
            slope: -wx / wy,
            intercept: -b / wy,
            c,
        })
    }

    pub fn signed_distance(&self, x: f64, y: f64) -> f64 {
        (y - self.slope * x - self.intercept) / (1.0 + self.slope * self.slope).sqrt()
    }

    pub fn classify(&self, x: f64, y: f64) -> Sensitivity {
        if y > self.slope * x + self.intercept {
            Sensitivity::Sensitive
        } else {
            Sensitivity::NonSensitive
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityScore {
    pub account_id: String,
    /// Euclidean distance to the separator, positive on the sensitive side.
    pub signed_distance: f64,
    pub label: Sensitivity,
}

pub fn classify_sensitivity(h: &Hyperplane, s: &FollowerStats) -> SensitivityScore {
    let label = h.classify(s.x, s.y);
    let d = h.signed_distance(s.x, s.y);
    // Keep the sign consistent with the strict-inequality label on the boundary.
    let signed_distance = match label {
        Sensitivity::Sensitive => d.max(f64::MIN_POSITIVE),
        Sensitivity::NonSensitive => d.min(0.0),
    };
    SensitivityScore {
        account_id: s.account_id.clone(),
        signed_distance,
        label,
    }
}

/// A labeled point in the (identifiable fraction, anonymous fraction) plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmPoint {
    pub x: f64,
    pub y: f64,
    pub label: Sensitivity,
}

/// Trained weights, bias and the solver's final state.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmSolution {
    pub w: [f64; 2],
    pub b: f64,
    pub alpha: Vec<f64>,
    pub iterations: usize,
    pub kkt_gap: f64,
}

impl SvmSolution {
    pub fn decision(&self, x: f64, y: f64) -> f64 {
        self.w[0] * x + self.w[1] * y + self.b
    }
}

/// Dual soft-margin linear SVM solved by SMO with second-order working-set
/// selection, run until the maximal KKT violation is at most `SVM_TOLERANCE`.
pub fn solve_linear_svm(points: &[SvmPoint], c: f64) -> Result<SvmSolution> {
    if points.len() < 2 {
        return Err(Error::invalid("SVM needs at least two points"));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::invalid(format!("C must be positive, got {c}")));
    }
    if points.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
        return Err(Error::invalid("SVM points must be finite"));
    }
    let has = |l| points.iter().any(|p| p.label == l);
    if !has(Sensitivity::Sensitive) || !has(Sensitivity::NonSensitive) {
        return Err(Error::invalid("SVM needs both sensitive and non-sensitive points"));
    }

    let n = points.len();
    let y: Vec<f64> = points.iter().map(|p| p.label.sign()).collect();
    let k = |i: usize, j: usize| points[i].x * points[j].x + points[i].y * points[j].y;
    let q = |i: usize, j: usize| y[i] * y[j] * k(i, j);
    let qd: Vec<f64> = (0..n).map(|i| k(i, i)).collect();

    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let in_up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let in_low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);

    let mut iterations = 0;
    let kkt_gap = loop {
        // i: maximal violator from the up set.
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            if in_up(alpha[t], y[t]) && -y[t] * grad[t] >= gmax {
                gmax = -y[t] * grad[t];
                i_sel = Some(t);
            }
        }
        // j: best second-order gain from the low set.
        let mut gmin = f64::INFINITY;
        let mut best_obj = f64::INFINITY;
        let mut j_sel = None;
        for t in 0..n {
            if !in_low(alpha[t], y[t]) {
                continue;
            }
            let v = -y[t] * grad[t];
            gmin = gmin.min(v);
            if let Some(i) = i_sel {
                let b = gmax - v;
                if b > 0.0 {
                    let a = qd[i] + qd[t] - 2.0 * k(i, t);
                    let a = if a > 0.0 { a } else { TAU };
                    let obj = -(b * b) / a;
                    if obj <= best_obj {
                        best_obj = obj;
                        j_sel = Some(t);
                    }
                }
            }
        }
        let gap = gmax - gmin;
        let (Some(i), Some(j)) = (i_sel, j_sel) else {
            break gap.max(0.0);
        };
        if gap <= SVM_TOLERANCE {
            break gap;
        }
        if iterations >= MAX_SVM_ITERATIONS {
            return Err(Error::NotConverged(format!(
                "SMO stopped after {iterations} iterations with KKT gap {gap:e}"
            )));
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let qij = q(i, j);
        if y[i] != y[j] {
            let quad = (qd[i] + qd[j] + 2.0 * qij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (qd[i] + qd[j] - 2.0 * qij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q(t, i) * di + q(t, j) * dj;
        }
    };

    let mut w = [0.0; 2];
    for t in 0..n {
        w[0] += alpha[t] * y[t] * points[t].x;
        w[1] += alpha[t] * y[t] * points[t].y;
    }

    // Bias from free vectors, else the middle of the feasible interval.
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut free_sum) = (0usize, 0.0);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 { free_sum / free as f64 } else { (ub + lb) / 2.0 };

    Ok(SvmSolution {
        w,
        b: -rho,
        alpha,
        iterations,
        kkt_gap,
    })
}

/// Fits the separator and converts it to slope/intercept form.
pub fn fit_linear_svm(points: &[SvmPoint], c: f64) -> Result<Hyperplane> {
    let sol = solve_linear_svm(points, c)?;
    Hyperplane::from_weights(sol.w[0], sol.w[1], sol.b, c)
}

fn by_distance_then_id(a: &SensitivityScore, b: &SensitivityScore, descending: bool) -> Ordering {
    let ord = a.signed_distance.total_cmp(&b.signed_distance);
    let ord = if descending { ord.reverse() } else { ord };
    ord.then_with(|| a.account_id.cmp(&b.account_id))
}

/// The `k` most sensitive accounts (largest distance first) and the `k` most
/// non-sensitive (most negative first).
pub fn rank_extremes(scores: &[SensitivityScore], k: usize) -> (Vec<SensitivityScore>, Vec<SensitivityScore>) {
    let mut sensitive: Vec<SensitivityScore> = scores
        .iter()
        .filter(|s| s.label == Sensitivity::Sensitive)
        .cloned()
        .collect();
    let mut non: Vec<SensitivityScore> = scores
        .iter()
        .filter(|s| s.label == Sensitivity::NonSensitive)
        .cloned()
        .collect();
    sensitive.sort_by(|a, b| by_distance_then_id(a, b, true));
    non.sort_by(|a, b| by_distance_then_id(a, b, false));
    sensitive.truncate(k);
    non.truncate(k);
    (sensitive, non)
}

/// `account_id,n_followers,x,y,unknown,signed_distance,label`
pub fn write_scores_csv<W: Write>(out: W, rows: &[(FollowerStats, SensitivityScore)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["account_id", "n_followers", "x", "y", "unknown", "signed_distance", "label"])?;
    for (s, score) in rows {
        w.write_record([
            s.account_id.clone(),
            s.n_followers.to_string(),
            s.x.to_string(),
            s.y.to_string(),
            s.unknown_fraction.to_string(),
            score.signed_distance.to_string(),
            score.label.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<scores csv>", e))
}

/// Reads the scores CSV back into stats and scores.
pub fn read_scores_csv(path: impl AsRef<std::path::Path>) -> Result<Vec<(FollowerStats, SensitivityScore)>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let f = |i: usize| rec.get(i).unwrap_or_default();
        let num = |i: usize| {
            f(i).parse::<f64>()
                .map_err(|_| Error::invalid(format!("{}: bad number {:?}", path.display(), f(i))))
        };
        let stats = FollowerStats {
            account_id: f(0).to_string(),
            n_followers: f(1)
                .parse()
                .map_err(|_| Error::invalid(format!("{}: bad follower count", path.display())))?,
            x: num(2)?,
            y: num(3)?,
            unknown_fraction: num(4)?,
        };
        let score = SensitivityScore {
            account_id: stats.account_id.clone(),
            signed_distance: num(5)?,
            label: f(6).parse()?,
        };
        out.push((stats, score));
    }
    Ok(out)
}

/// Scatter data: `account_id,x,y,truth_label`.
pub fn write_scatter_csv<W: Write>(out: W, points: &[(String, SvmPoint)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["account_id", "x", "y", "truth_label"])?;
    for (id, p) in points {
        w.write_record([id.clone(), p.x.to_string(), p.y.to_string(), p.label.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<scatter csv>", e))
}

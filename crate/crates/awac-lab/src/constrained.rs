//! The KL-constrained policy improvement problem on a finite action set,
//! solved exactly.
//!
//! At a fixed state, improving on a behavior policy `pi_beta` subject to a
//! KL budget has a closed-form nonparametric solution: reweight `pi_beta`
//! by exponentiated advantages and normalize. This module implements that
//! solution, recovers the Lagrange multiplier for a given budget by
//! bisection, verifies both against an exhaustive simplex-grid search, and
//! provides the projection and inequality machinery that connects the
//! nonparametric solution to a parametric policy trained by weighted
//! maximum likelihood.

use thiserror::Error;

/// Convergence tolerance for the forward-KL projection, in total variation.
pub const PROJECTION_TOL: f64 = 1e-4;

/// Bisection bracket and iteration budget for [`solve_for_lambda`].
pub const LAMBDA_MIN: f64 = 1e-6;
pub const LAMBDA_MAX: f64 = 1e6;
pub const BISECTION_ITERS: usize = 200;
const BISECTION_KL_TOL: f64 = 1e-8;

const DIST_SUM_TOL: f64 = 1e-9;
const BRUTE_FORCE_MAX_ACTIONS: usize = 4;
const BRUTE_FORCE_MAX_RESOLUTION: f64 = 1e-2;

#[derive(Debug, Error)]
pub enum ConstrainedError {
    #[error("pi_beta has {pi_beta} entries but advantage has {advantage}")]
    LengthMismatch { pi_beta: usize, advantage: usize },
    #[error("probability vector sums to {sum}, not 1")]
    NotADistribution { sum: f64 },
    #[error("probability vector must be strictly positive, entry {index} is {value}")]
    NotStrictlyPositive { index: usize, value: f64 },
    #[error("advantage entry {index} is not finite")]
    NonFiniteAdvantage { index: usize },
    #[error("lambda must be positive and finite, got {lambda}")]
    BadLambda { lambda: f64 },
    #[error("epsilon must be positive, got {epsilon}")]
    BadEpsilon { epsilon: f64 },
    #[error("KL divergence undefined: p[{index}] > 0 but q[{index}] = 0")]
    SupportViolation { index: usize },
    #[error("brute force refuses {n} actions (limit {max}): combinatorial blowup")]
    TooManyActions { n: usize, max: usize },
    #[error("brute force needs a grid at least as fine as {max}, got {resolution}")]
    ResolutionTooCoarse { resolution: f64, max: f64 },
    #[error("grid would enumerate ~{candidates:.1e} candidates; refusing")]
    GridTooLarge { candidates: f64 },
    #[error("action set must be non-empty")]
    Empty,
}

/// The KL budget, given either directly as a multiplier or as a divergence
/// bound to be met by bisection. Exactly one form applies per problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KlBudget {
    /// KL budget epsilon > 0; the multiplier is recovered by bisection.
    Epsilon(f64),
    /// Lagrange multiplier lambda > 0, used directly.
    Lambda(f64),
}

/// One constrained improvement problem at a fixed state: a strictly positive
/// behavior distribution over actions, an advantage for each action, and a
/// budget.
#[derive(Debug, Clone)]
pub struct ConstrainedProblem {
    pub pi_beta: Vec<f64>,
    pub advantage: Vec<f64>,
    pub budget: KlBudget,
}

fn validate_positive_dist(p: &[f64]) -> Result<(), ConstrainedError> {
    if p.is_empty() {
        return Err(ConstrainedError::Empty);
    }
    for (i, &v) in p.iter().enumerate() {
        if !(v > 0.0) {
            return Err(ConstrainedError::NotStrictlyPositive { index: i, value: v });
        }
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > DIST_SUM_TOL {
        return Err(ConstrainedError::NotADistribution { sum });
    }
    Ok(())
}

fn validate_advantage(a: &[f64], n: usize) -> Result<(), ConstrainedError> {
    if a.len() != n {
        return Err(ConstrainedError::LengthMismatch { pi_beta: n, advantage: a.len() });
    }
    for (i, &v) in a.iter().enumerate() {
        if !v.is_finite() {
            return Err(ConstrainedError::NonFiniteAdvantage { index: i });
        }
    }
    Ok(())
}

impl ConstrainedProblem {
    pub fn with_lambda(
        pi_beta: Vec<f64>,
        advantage: Vec<f64>,
        lambda: f64,
    ) -> Result<Self, ConstrainedError> {
        validate_positive_dist(&pi_beta)?;
        validate_advantage(&advantage, pi_beta.len())?;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(ConstrainedError::BadLambda { lambda });
        }
        Ok(Self { pi_beta, advantage, budget: KlBudget::Lambda(lambda) })
    }

    pub fn with_epsilon(
        pi_beta: Vec<f64>,
        advantage: Vec<f64>,
        epsilon: f64,
    ) -> Result<Self, ConstrainedError> {
        validate_positive_dist(&pi_beta)?;
        validate_advantage(&advantage, pi_beta.len())?;
        if !(epsilon > 0.0) {
            return Err(ConstrainedError::BadEpsilon { epsilon });
        }
        Ok(Self { pi_beta, advantage, budget: KlBudget::Epsilon(epsilon) })
    }

    /// Solves with the stored multiplier. The budget must be [`KlBudget::Lambda`].
    pub fn solve(&self) -> Result<Vec<f64>, ConstrainedError> {
        match self.budget {
            KlBudget::Lambda(l) => Ok(solve_nonparametric(&self.pi_beta, &self.advantage, l)),
            KlBudget::Epsilon(e) => Err(ConstrainedError::BadLambda { lambda: e }),
        }
    }

    /// Recovers the multiplier for the stored budget by bisection. The budget
    /// must be [`KlBudget::Epsilon`].
    pub fn solve_with_budget(&self) -> Result<LambdaSolution, ConstrainedError> {
        match self.budget {
            KlBudget::Epsilon(e) => Ok(solve_for_lambda(&self.pi_beta, &self.advantage, e)),
            KlBudget::Lambda(l) => Err(ConstrainedError::BadEpsilon { epsilon: l }),
        }
    }
}

/// Closed-form solution of the constrained improvement problem for a given
/// multiplier: `pi*(a) = pi_beta(a) * exp(advantage(a) / lambda) / Z`.
///
/// The maximum of `advantage / lambda` is subtracted before exponentiation;
/// the result is invariant to that shift, and it prevents overflow. The
/// output sums to 1 within 1e-12.
///
/// Panics if `lambda` is not positive and finite, if the lengths differ, or
/// if any advantage is non-finite; use [`ConstrainedProblem`] for validated
/// construction.
pub fn solve_nonparametric(pi_beta: &[f64], advantage: &[f64], lambda: f64) -> Vec<f64> {
    assert!(lambda > 0.0 && lambda.is_finite(), "lambda must be positive and finite");
    assert_eq!(pi_beta.len(), advantage.len(), "pi_beta and advantage lengths differ");
    assert!(!pi_beta.is_empty(), "action set must be non-empty");
    assert!(advantage.iter().all(|a| a.is_finite()), "advantages must be finite");
    let max_exponent = advantage
        .iter()
        .map(|a| a / lambda)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = pi_beta
        .iter()
        .zip(advantage)
        .map(|(&p, &a)| p * (a / lambda - max_exponent).exp())
        .collect();
    let z: f64 = out.iter().sum();
    for v in &mut out {
        *v /= z;
    }
    out
}

/// Result of [`solve_for_lambda`].
#[derive(Debug, Clone)]
pub struct LambdaSolution {
    /// The recovered multiplier. `+inf` when the advantage is constant (any
    /// multiplier reproduces `pi_beta`); [`LAMBDA_MIN`] when saturated.
    pub lambda: f64,
    pub policy: Vec<f64>,
    /// True when the budget exceeds the KL of the greedy limit, so no
    /// positive multiplier can spend it all; the policy returned is the
    /// solution at the bottom of the bracket, numerically the greedy limit.
    pub saturated: bool,
}

/// Recovers the Lagrange multiplier whose closed-form solution meets the KL
/// budget exactly: bisection on lambda in `[LAMBDA_MIN, LAMBDA_MAX]` until
/// `KL(pi*(lambda) || pi_beta)` is within 1e-8 of `epsilon`.
///
/// A constant advantage makes every multiplier optimal; `pi_beta` is
/// returned with a `+inf` sentinel. A budget larger than the KL of the
/// greedy limit cannot be met; the greedy limit is returned with the
/// `saturated` flag set. A budget below the KL at `LAMBDA_MAX` (an extreme
/// not reachable with any reasonable advantage scale) resolves to the
/// flattest bracketed solution.
pub fn solve_for_lambda(pi_beta: &[f64], advantage: &[f64], epsilon: f64) -> LambdaSolution {
    assert!(epsilon > 0.0, "epsilon must be positive");
    assert_eq!(pi_beta.len(), advantage.len(), "pi_beta and advantage lengths differ");
    let spread = advantage.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - advantage.iter().cloned().fold(f64::INFINITY, f64::min);
    if spread == 0.0 {
        return LambdaSolution { lambda: f64::INFINITY, policy: pi_beta.to_vec(), saturated: false };
    }
    let kl_at = |lambda: f64| -> (f64, Vec<f64>) {
        let p = solve_nonparametric(pi_beta, advantage, lambda);
        let kl = kl_divergence(&p, pi_beta).expect("pi_beta is strictly positive");
        (kl, p)
    };
    let (kl_lo, policy_lo) = kl_at(LAMBDA_MIN);
    if kl_lo <= epsilon {
        return LambdaSolution { lambda: LAMBDA_MIN, policy: policy_lo, saturated: true };
    }
    let mut lo = LAMBDA_MIN;
    let mut hi = LAMBDA_MAX;
    let mut best = kl_at(LAMBDA_MAX);
    let mut best_lambda = LAMBDA_MAX;
    if best.0 > epsilon {
        // Budget below the flattest bracketed KL; report the endpoint.
        return LambdaSolution { lambda: LAMBDA_MAX, policy: best.1, saturated: false };
    }
    for _ in 0..BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        let (kl, policy) = kl_at(mid);
        if (kl - epsilon).abs() <= BISECTION_KL_TOL {
            return LambdaSolution { lambda: mid, policy, saturated: false };
        }
        if kl > epsilon {
            lo = mid;
        } else {
            hi = mid;
            best = (kl, policy);
            best_lambda = mid;
        }
    }
    LambdaSolution { lambda: best_lambda, policy: best.1, saturated: false }
}

/// Exhaustive simplex-grid maximization of the expected advantage subject to
/// the KL budget: the independent oracle for the closed form.
///
/// The search starts with a coarse pass enumerating every composition of
/// `round(1/resolution)` into `n` parts, keeping the feasible candidate with
/// the largest `E_pi[advantage]`, then reruns on progressively finer grids
/// restricted to boxes around the incumbent. The refinement matters because
/// the objective is flat to first order along the constraint boundary at
/// the optimum, so a single-pass argmax location is only pinned to within
/// about the square root of the grid spacing; the local passes shrink that
/// band well below the coarse spacing. Exact objective ties break toward
/// the candidate with smaller divergence from `pi_beta`.
///
/// Refuses more than 4 actions or a grid coarser than 1e-2. A constant
/// advantage ties every feasible policy; `pi_beta` is returned by
/// convention.
pub fn brute_force_constrained(
    pi_beta: &[f64],
    advantage: &[f64],
    epsilon: f64,
    resolution: f64,
) -> Result<Vec<f64>, ConstrainedError> {
    let n = pi_beta.len();
    validate_positive_dist(pi_beta)?;
    validate_advantage(advantage, n)?;
    if n > BRUTE_FORCE_MAX_ACTIONS {
        return Err(ConstrainedError::TooManyActions { n, max: BRUTE_FORCE_MAX_ACTIONS });
    }
    if !(resolution > 0.0 && resolution <= BRUTE_FORCE_MAX_RESOLUTION) {
        return Err(ConstrainedError::ResolutionTooCoarse {
            resolution,
            max: BRUTE_FORCE_MAX_RESOLUTION,
        });
    }
    let spread = advantage.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - advantage.iter().cloned().fold(f64::INFINITY, f64::min);
    if spread == 0.0 {
        return Ok(pi_beta.to_vec());
    }
    let m = (1.0 / resolution).round() as usize;
    // C(m + n - 1, n - 1) compositions of m into n parts.
    let candidates: f64 = (1..n).map(|i| (m + i) as f64 / i as f64).product();
    if candidates > 2e8 {
        return Err(ConstrainedError::GridTooLarge { candidates });
    }
    let mut den = m;
    let mut winner = grid_search(pi_beta, advantage, epsilon, den, &vec![0; n], &vec![den; n])
        .expect("the full grid always contains a feasible point near pi_beta");
    // Each round multiplies the grid density and searches a box around the
    // incumbent. The box halfwidth (an absolute probability) must cover the
    // flat band at the previous spacing, which scales with the square root
    // of that spacing. One coarser round for 4 actions keeps the
    // enumeration small.
    let rounds: &[(usize, f64)] = if n <= 3 { &[(8, 0.03), (8, 0.008), (8, 0.002)] } else { &[(8, 0.03)] };
    for &(factor, halfwidth) in rounds {
        let fine_den = den * factor;
        let halfwidth = halfwidth * (resolution / 1e-3).sqrt();
        let hw_counts = (halfwidth * fine_den as f64).ceil() as usize;
        let lo: Vec<usize> = winner
            .iter()
            .map(|&k| (k * factor).saturating_sub(hw_counts))
            .collect();
        let hi: Vec<usize> = winner
            .iter()
            .map(|&k| ((k * factor) + hw_counts).min(fine_den))
            .collect();
        winner = grid_search(pi_beta, advantage, epsilon, fine_den, &lo, &hi)
            .expect("the refinement box contains the previous incumbent");
        den = fine_den;
    }
    Ok(winner.iter().map(|&k| k as f64 / den as f64).collect())
}

/// Enumerates grid points `p_i = k_i / m` with `lo[i] <= k_i <= hi[i]` and
/// `sum k_i = m`, returning the counts of the feasible candidate with the
/// largest expected advantage (exact ties prefer smaller KL). `None` when no
/// candidate in the box is feasible.
fn grid_search(
    pi_beta: &[f64],
    advantage: &[f64],
    epsilon: f64,
    m: usize,
    lo: &[usize],
    hi: &[usize],
) -> Option<Vec<usize>> {
    let n = pi_beta.len();
    // Per-action lookup tables over in-box grid counts: the KL contribution
    // of p_i = k/m against pi_beta[i] and the objective contribution
    // (k/m) * advantage[i]. Candidate evaluation is then pure addition.
    let mut kl_term: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut obj_term: Vec<Vec<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut kl_row = Vec::with_capacity(hi[i] - lo[i] + 1);
        let mut obj_row = Vec::with_capacity(hi[i] - lo[i] + 1);
        for k in lo[i]..=hi[i] {
            let p = k as f64 / m as f64;
            kl_row.push(if k == 0 { 0.0 } else { p * (p / pi_beta[i]).ln() });
            obj_row.push(p * advantage[i]);
        }
        kl_term.push(kl_row);
        obj_term.push(obj_row);
    }
    // suffix_lo[i] / suffix_hi[i]: bounds on the mass the dimensions at and
    // after i can absorb, used to prune the enumeration.
    let mut suffix_lo = vec![0usize; n + 1];
    let mut suffix_hi = vec![0usize; n + 1];
    for i in (0..n).rev() {
        suffix_lo[i] = suffix_lo[i + 1] + lo[i];
        suffix_hi[i] = suffix_hi[i + 1] + hi[i];
    }
    // Tiny slack so grid points on the constraint boundary stay feasible.
    let budget = epsilon + 1e-12;
    struct Best {
        obj: f64,
        kl: f64,
        counts: Option<Vec<usize>>,
    }
    let mut best = Best { obj: f64::NEG_INFINITY, kl: f64::INFINITY, counts: None };
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        counts: &mut [usize],
        i: usize,
        remaining: usize,
        kl_acc: f64,
        obj_acc: f64,
        kl_term: &[Vec<f64>],
        obj_term: &[Vec<f64>],
        lo: &[usize],
        hi: &[usize],
        suffix_lo: &[usize],
        suffix_hi: &[usize],
        budget: f64,
        best: &mut Best,
    ) {
        let n = counts.len();
        if i == n - 1 {
            if remaining < lo[i] || remaining > hi[i] {
                return;
            }
            let kl = kl_acc + kl_term[i][remaining - lo[i]];
            if kl <= budget {
                let obj = obj_acc + obj_term[i][remaining - lo[i]];
                if obj > best.obj || (obj == best.obj && kl < best.kl) {
                    best.obj = obj;
                    best.kl = kl;
                    counts[i] = remaining;
                    best.counts = Some(counts.to_vec());
                }
            }
            return;
        }
        let k_min = lo[i].max(remaining.saturating_sub(suffix_hi[i + 1]));
        let k_max = hi[i].min(remaining.saturating_sub(suffix_lo[i + 1]));
        for k in k_min..=k_max {
            counts[i] = k;
            recurse(
                counts,
                i + 1,
                remaining - k,
                kl_acc + kl_term[i][k - lo[i]],
                obj_acc + obj_term[i][k - lo[i]],
                kl_term,
                obj_term,
                lo,
                hi,
                suffix_lo,
                suffix_hi,
                budget,
                best,
            );
        }
    }
    let mut counts = vec![0usize; n];
    recurse(
        &mut counts,
        0,
        m,
        0.0,
        0.0,
        &kl_term,
        &obj_term,
        lo,
        hi,
        &suffix_lo,
        &suffix_hi,
        budget,
        &mut best,
    );
    best.counts
}

/// KL divergence `sum p ln(p/q)` with the convention `0 ln 0 = 0`. Undefined
/// (an error) where `p` puts mass outside the support of `q`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64, ConstrainedError> {
    assert_eq!(p.len(), q.len(), "distribution lengths differ");
    let mut kl = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi == 0.0 {
            continue;
        }
        if qi <= 0.0 {
            return Err(ConstrainedError::SupportViolation { index: i });
        }
        kl += pi * (pi / qi).ln();
    }
    Ok(kl)
}

/// Total variation distance: half the L1 distance.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "distribution lengths differ");
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Softmax of a logit vector, shifted by the max for stability.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let z: f64 = out.iter().sum();
    for v in &mut out {
        *v /= z;
    }
    out
}

/// Result of [`project_forward_kl`].
#[derive(Debug, Clone)]
pub struct Projection {
    pub logits: Vec<f64>,
    pub policy: Vec<f64>,
    pub steps_used: usize,
    /// Total variation between the final policy and the target.
    pub residual_tv: f64,
    /// True when the residual reached [`PROJECTION_TOL`] within the budget.
    pub converged: bool,
}

/// Projects a target distribution onto a softmax-parameterized policy by
/// gradient descent on the cross-entropy `E_target[-ln pi_theta]` (the
/// theta-dependent part of the forward KL divergence). The gradient is
/// `pi_theta - target`. Stops when the total variation to the target falls
/// below [`PROJECTION_TOL`], otherwise reports the residual after the step
/// budget.
pub fn project_forward_kl(
    target: &[f64],
    init_logits: &[f64],
    max_steps: usize,
    rate: f64,
) -> Projection {
    assert_eq!(target.len(), init_logits.len(), "target and logit lengths differ");
    assert!(rate > 0.0, "step size must be positive");
    let mut logits = init_logits.to_vec();
    let mut policy = softmax(&logits);
    let mut residual = total_variation(&policy, target);
    let mut steps_used = 0;
    while residual > PROJECTION_TOL && steps_used < max_steps {
        for i in 0..logits.len() {
            logits[i] -= rate * (policy[i] - target[i]);
        }
        policy = softmax(&logits);
        residual = total_variation(&policy, target);
        steps_used += 1;
    }
    Projection {
        logits,
        policy,
        steps_used,
        residual_tv: residual,
        converged: residual <= PROJECTION_TOL,
    }
}

/// The two-sided bound chain evaluated by [`pinsker_chain_check`].
#[derive(Debug, Clone, Copy)]
pub struct PinskerChain {
    /// `KL(p || q)`.
    pub lhs: f64,
    /// `(2 / alpha) * TV(p, q)^2`.
    pub mid: f64,
    /// `(1 / alpha) * KL(q || p)`; `+inf` when q puts mass outside p's support.
    pub rhs: f64,
    pub holds: bool,
}

/// Checks the chain `KL(p||q) <= (2/alpha) TV^2 <= (1/alpha) KL(q||p)` where
/// `alpha` lower-bounds the entries of `q`. The left inequality is the
/// reverse-Pinsker bound through the smallest mass of `q`; the right one is
/// Pinsker's inequality divided by `alpha`.
pub fn pinsker_chain_check(p: &[f64], q: &[f64], alpha: f64) -> PinskerChain {
    assert!(alpha > 0.0, "alpha must be positive");
    assert!(
        q.iter().all(|&v| v >= alpha),
        "alpha must lower-bound every entry of q"
    );
    let lhs = kl_divergence(p, q).expect("q is strictly positive");
    let tv = total_variation(p, q);
    let mid = (2.0 / alpha) * tv * tv;
    let rhs = match kl_divergence(q, p) {
        Ok(kl) => kl / alpha,
        Err(_) => f64::INFINITY,
    };
    let slack = 1e-12;
    let holds = lhs <= mid + slack * (1.0 + mid.abs()) && mid <= rhs + slack * (1.0 + mid.abs());
    PinskerChain { lhs, mid, rhs, holds }
}

/// The normalizer and its two-sided bracket computed by [`z_bounds`].
#[derive(Debug, Clone, Copy)]
pub struct ZBounds {
    /// `z = sum_a pi(a) * exp(advantage(a) / lambda)`.
    pub z: f64,
    /// Cauchy-Schwarz upper bound `sqrt(sum pi^2 * sum exp(2 A / lambda))`.
    pub c_upper: f64,
    /// Polya-Szego lower bound derived from the entrywise extrema of the two
    /// factor sequences.
    pub c_lower: f64,
}

/// Brackets the normalizer of the closed-form solution between its
/// Cauchy-Schwarz upper bound and Polya-Szego lower bound. For sequences
/// `f = pi` and `g = exp(advantage / lambda)` with entrywise extrema
/// `m_f <= f <= M_f` and `m_g <= g <= M_g`, Polya-Szego gives
/// `sum f g >= 2 sqrt(sum f^2 sum g^2) / (sqrt(x) + sqrt(1/x))` with
/// `x = (M_f M_g) / (m_f m_g)`. Both bounds are tight when `f` and `g` are
/// each constant. The bracket is asserted before returning.
pub fn z_bounds(pi: &[f64], advantage: &[f64], lambda: f64) -> ZBounds {
    assert!(lambda > 0.0 && lambda.is_finite(), "lambda must be positive and finite");
    assert_eq!(pi.len(), advantage.len(), "pi and advantage lengths differ");
    assert!(pi.iter().all(|&p| p > 0.0), "pi must be strictly positive");
    let g: Vec<f64> = advantage.iter().map(|&a| (a / lambda).exp()).collect();
    let z: f64 = pi.iter().zip(&g).map(|(&f, &gv)| f * gv).sum();
    let sum_f2: f64 = pi.iter().map(|&f| f * f).sum();
    let sum_g2: f64 = g.iter().map(|&gv| gv * gv).sum();
    let c_upper = (sum_f2 * sum_g2).sqrt();
    let m_f = pi.iter().cloned().fold(f64::INFINITY, f64::min);
    let big_m_f = pi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let m_g = g.iter().cloned().fold(f64::INFINITY, f64::min);
    let big_m_g = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let x = (big_m_f * big_m_g) / (m_f * m_g);
    let c_lower = 2.0 * c_upper / (x.sqrt() + (1.0 / x).sqrt());
    let slack = 1e-9 * (1.0 + z.abs());
    assert!(
        c_lower <= z + slack && z <= c_upper + slack,
        "bound bracket violated: {c_lower} <= {z} <= {c_upper}"
    );
    ZBounds { z, c_upper, c_lower }
}

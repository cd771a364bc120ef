//! Product-form interference objective and its truncated polynomial
//! expansion over the binary nulling variables.
//!
//! Every served user contributes two affine "brackets" (its uplink and
//! downlink interference denominators). The product of all brackets is the
//! quantity the nulling assignment should drive down. Expanding it yields a
//! multilinear polynomial on the binary variables; truncation keeps orders
//! up to `max_order`, which is exact for the retained orders because
//! variable sets only grow along the multiplication.
//!
//! Variables are indexed column-stacked: variable `j·K + k` is the decision
//! "BS j nulls user k".

use std::collections::BTreeMap;

use crate::hetnet::{NullingAssignment, Scenario};

use super::OptimizerError;

/// Minimum value the linearization probability is clamped to.
pub const P_MIN: f64 = 1e-3;

/// One affine factor `constant − Σ coef·n_var` of the interference product.
#[derive(Debug, Clone)]
pub(crate) struct Bracket {
    pub constant: f64,
    /// `(variable id, coefficient)`, coefficient ≥ 0.
    pub terms: Vec<(u32, f64)>,
}

impl Bracket {
    fn eval(&self, assigned: impl Fn(u32) -> bool) -> f64 {
        let mut v = self.constant;
        for &(var, coef) in &self.terms {
            if assigned(var) {
                v -= coef;
            }
        }
        v
    }
}

/// Column-stacked variable index for "BS `j` nulls user `k`".
pub fn variable_index(k: usize, j: usize, users: usize) -> usize {
    j * users + k
}

/// The uplink and downlink interference brackets of every served user, in
/// user order. Variables appear only for pairs that are free to null
/// (`x_{k,j} = 0`); interference from co-served users stays in the constant.
pub(crate) fn interference_brackets(s: &Scenario) -> Vec<Bracket> {
    let k_n = s.user_count();
    let j_n = s.station_count();
    let eps = s.noise_floor;
    let mut brackets = Vec::with_capacity(2 * k_n);
    for k in 0..k_n {
        let j = s.users[k].serving_bs;
        let (mut ul, mut dl) = (
            Bracket {
                constant: eps,
                terms: Vec::new(),
            },
            Bracket {
                constant: eps,
                terms: Vec::new(),
            },
        );
        if j == 0 {
            // Macro user: only small-cell users interfere on the uplink.
            for k2 in 0..k_n {
                if s.users[k2].serving_bs >= 1 {
                    let power = s.user_power_lin(k2) * s.gains[k2][0];
                    ul.constant += power;
                    ul.terms.push((variable_index(k2, 0, k_n) as u32, power));
                }
            }
            for j2 in 1..j_n {
                let power = s.bs_power_lin(j2) * s.gains[k][j2];
                dl.constant += power;
                dl.terms.push((variable_index(k, j2, k_n) as u32, power));
            }
        } else {
            for k2 in 0..k_n {
                if k2 == k {
                    continue;
                }
                let power = s.user_power_lin(k2) * s.gains[k2][j];
                ul.constant += power;
                if s.users[k2].serving_bs != j {
                    ul.terms.push((variable_index(k2, j, k_n) as u32, power));
                }
            }
            for j2 in 1..j_n {
                if j2 == j {
                    continue;
                }
                let power = s.bs_power_lin(j2) * s.gains[k][j2];
                dl.constant += power;
                dl.terms.push((variable_index(k, j2, k_n) as u32, power));
            }
        }
        ul.terms.sort_unstable_by_key(|t| t.0);
        dl.terms.sort_unstable_by_key(|t| t.0);
        brackets.push(ul);
        brackets.push(dl);
    }
    brackets
}

/// Exact product of every served user's interference denominators under
/// assignment `n`. Smaller is better; with all interference nulled it
/// floors at `ε²` per served user (when no cell serves two users).
pub fn interference_product(s: &Scenario, n: &NullingAssignment) -> f64 {
    interference_brackets(s)
        .iter()
        .map(|b| b.eval(|var| n.get(var as usize % s.user_count(), var as usize / s.user_count())))
        .product()
}

/// Negated log of [`interference_product`], computed as a sum of logs so large
/// networks do not underflow. Larger is better.
pub fn interference_product_neg_log(s: &Scenario, n: &NullingAssignment) -> f64 {
    -interference_brackets(s)
        .iter()
        .map(|b| {
            b.eval(|var| n.get(var as usize % s.user_count(), var as usize / s.user_count()))
                .ln()
        })
        .sum::<f64>()
}

/// Estimated probability that an arbitrary nulling variable is 1 when every
/// BS spends its whole DoF budget, clamped to `[P_MIN, 1]`. Degenerate
/// networks (no users or no small cells, hence no usable variables) map
/// to 1.
pub fn nulling_probability(s: &Scenario) -> f64 {
    let k = s.user_count();
    let j = s.small_cell_count();
    if k == 0 || j == 0 {
        return 1.0;
    }
    let stations = s.station_count();
    let d_mean = s.bss.iter().map(|b| b.dof_budget as f64).sum::<f64>() / stations as f64;
    let q_mean = s
        .multipath
        .iter()
        .flat_map(|row| row.iter())
        .map(|&q| q as f64)
        .sum::<f64>()
        / (k * stations) as f64;
    let raw =
        (d_mean - 1.0) / (q_mean * k as f64) - 1.0 / j as f64 - 1.0 / (q_mean * (j * k) as f64);
    raw.clamp(P_MIN, 1.0)
}

/// Per-station variant of [`nulling_probability`]: the budget term uses each
/// station's own DoF budget and mean multipath count.
pub fn nulling_probability_per_station(s: &Scenario) -> Vec<f64> {
    let k = s.user_count();
    let j = s.small_cell_count();
    if k == 0 || j == 0 {
        return vec![1.0; s.station_count()];
    }
    (0..s.station_count())
        .map(|st| {
            let q_mean = (0..k).map(|u| s.multipath[u][st] as f64).sum::<f64>() / k as f64;
            let raw = (s.bss[st].dof_budget as f64 - 1.0) / (q_mean * k as f64)
                - 1.0 / j as f64
                - 1.0 / (q_mean * (j * k) as f64);
            raw.clamp(P_MIN, 1.0)
        })
        .collect()
}

/// How an order-M monomial is spread across its variables when the
/// objective is linearized.
#[derive(Debug, Clone)]
pub enum WeightRule {
    /// `ω(M) = P^{M−1}/M`: both sides keep the same expectation under
    /// i.i.d. Bernoulli(P) variables.
    ExpectationMatched { p: f64 },
    /// Like [`WeightRule::ExpectationMatched`] but with one probability
    /// per BS, applied to each variable according to its station.
    ExpectationMatchedPerStation { p: Vec<f64>, users: usize },
    /// `ω(M) = 1/M`: the arithmetic-mean replacement, an upper bound on
    /// the product for nonnegative coefficients.
    UpperBound,
}

impl WeightRule {
    /// Weight carried to variable `var` by a monomial of order `order`.
    fn weight(&self, var: u32, order: usize) -> f64 {
        if order <= 1 {
            return 1.0;
        }
        match self {
            WeightRule::ExpectationMatched { p } => p.powi(order as i32 - 1) / order as f64,
            WeightRule::ExpectationMatchedPerStation { p, users } => {
                let st = var as usize / users;
                p[st].powi(order as i32 - 1) / order as f64
            }
            WeightRule::UpperBound => 1.0 / order as f64,
        }
    }
}

/// Expanded objective: sorted variable-index sets mapped to coefficients.
/// The empty set holds the constant term.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialObjective {
    pub monomials: BTreeMap<Vec<u32>, f64>,
    pub max_order: usize,
}

impl PolynomialObjective {
    pub fn constant_term(&self) -> f64 {
        self.monomials.get(&Vec::new()).copied().unwrap_or(0.0)
    }

    /// Evaluates the polynomial at a binary point indexed by variable id.
    pub fn evaluate(&self, point: &[u8]) -> f64 {
        self.monomials
            .iter()
            .filter(|(vars, _)| vars.iter().all(|&v| point[v as usize] != 0))
            .map(|(_, &coef)| coef)
            .sum()
    }
}

/// Spreads every monomial onto its variables per the weight rule. Order-1
/// coefficients pass through, the constant is dropped.
pub fn linearize(poly: &PolynomialObjective, rule: &WeightRule, num_vars: usize) -> Vec<f64> {
    let mut c = vec![0.0; num_vars];
    for (vars, &coef) in &poly.monomials {
        let order = vars.len();
        if order == 0 {
            continue;
        }
        for &v in vars {
            c[v as usize] += coef * rule.weight(v, order);
        }
    }
    c
}

// --- dense expansion engine (orders ≤ 3) ------------------------------------

fn pair_index(i: usize, j: usize) -> usize {
    debug_assert!(i < j);
    j * (j - 1) / 2 + i
}

fn triple_index(i: usize, j: usize, k: usize) -> usize {
    debug_assert!(i < j && j < k);
    k * (k - 1) * (k - 2) / 6 + j * (j - 1) / 2 + i
}

/// Flat coefficient arrays over the variables that actually occur, with
/// combinatorially ranked pair/triple slots. Exact for orders ≤ max_order.
#[derive(Debug, Clone)]
pub(crate) struct DenseExpansion {
    /// Dense slot → variable id, sorted ascending.
    pub vars: Vec<u32>,
    pub max_order: usize,
    pub c0: f64,
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
    pub c3: Vec<f64>,
}

impl DenseExpansion {
    fn new(vars: Vec<u32>, max_order: usize) -> Self {
        let v = vars.len();
        let n2 = if max_order >= 2 && v >= 2 {
            v * (v - 1) / 2
        } else {
            0
        };
        let n3 = if max_order >= 3 && v >= 3 {
            v * (v - 1) * (v - 2) / 6
        } else {
            0
        };
        Self {
            vars,
            max_order,
            c0: 1.0,
            c1: vec![0.0; v],
            c2: vec![0.0; n2],
            c3: vec![0.0; n3],
        }
    }

    /// In-place multiplication by one bracket, processing orders downward
    /// so each stage reads only not-yet-updated lower orders.
    fn multiply(&mut self, constant: f64, terms: &[(usize, f64)], lookup: &mut [f64]) {
        let v = self.vars.len();
        for &(idx, coef) in terms {
            lookup[idx] = coef;
        }
        if self.max_order >= 3 && v >= 3 {
            // scale triples by (a − b_i − b_j − b_k)
            let mut t = 0;
            for k in 2..v {
                let sk = constant - lookup[k];
                for j in 1..k {
                    let sj = sk - lookup[j];
                    for i in 0..j {
                        self.c3[t] *= sj - lookup[i];
                        t += 1;
                    }
                }
            }
            // pair × new variable
            for &(vi, coef) in terms {
                let mut pair = 0;
                for j in 1..v {
                    for i in 0..j {
                        if vi != i && vi != j {
                            let (a, b, c) = sort3(i, j, vi);
                            self.c3[triple_index(a, b, c)] -= coef * self.c2[pair];
                        }
                        pair += 1;
                    }
                }
            }
        }
        if self.max_order >= 2 && v >= 2 {
            let mut t = 0;
            for j in 1..v {
                let sj = constant - lookup[j];
                for i in 0..j {
                    self.c2[t] *= sj - lookup[i];
                    t += 1;
                }
            }
            for &(vi, coef) in terms {
                for w in 0..v {
                    if w != vi {
                        let (a, b) = if w < vi { (w, vi) } else { (vi, w) };
                        self.c2[pair_index(a, b)] -= coef * self.c1[w];
                    }
                }
            }
        }
        for (w, slot) in self.c1.iter_mut().enumerate() {
            *slot *= constant - lookup[w];
        }
        for &(vi, coef) in terms {
            self.c1[vi] -= coef * self.c0;
        }
        self.c0 *= constant;
        for &(idx, _) in terms {
            lookup[idx] = 0.0;
        }
    }

    pub fn constant_term(&self) -> f64 {
        self.c0
    }

    /// Evaluates the truncated polynomial at a binary point indexed by
    /// variable id.
    pub fn evaluate(&self, point: &[u8]) -> f64 {
        let v = self.vars.len();
        let on: Vec<usize> = (0..v)
            .filter(|&i| point[self.vars[i] as usize] != 0)
            .collect();
        let mut acc = self.c0;
        for &i in &on {
            acc += self.c1[i];
        }
        if self.max_order >= 2 {
            for (a, &i) in on.iter().enumerate() {
                for &j in &on[a + 1..] {
                    acc += self.c2[pair_index(i, j)];
                }
            }
        }
        if self.max_order >= 3 {
            for (a, &i) in on.iter().enumerate() {
                for (b, &j) in on.iter().enumerate().skip(a + 1) {
                    for &k in &on[b + 1..] {
                        acc += self.c3[triple_index(i, j, k)];
                    }
                }
            }
        }
        acc
    }

    pub fn linearize(&self, rule: &WeightRule, num_vars: usize) -> Vec<f64> {
        let v = self.vars.len();
        let mut c = vec![0.0; num_vars];
        for i in 0..v {
            c[self.vars[i] as usize] += self.c1[i];
        }
        if self.max_order >= 2 {
            let mut t = 0;
            for j in 1..v {
                for i in 0..j {
                    let coef = self.c2[t];
                    t += 1;
                    if coef != 0.0 {
                        let (vi, vj) = (self.vars[i], self.vars[j]);
                        c[vi as usize] += coef * rule.weight(vi, 2);
                        c[vj as usize] += coef * rule.weight(vj, 2);
                    }
                }
            }
        }
        if self.max_order >= 3 {
            let mut t = 0;
            for k in 2..v {
                for j in 1..k {
                    for i in 0..j {
                        let coef = self.c3[t];
                        t += 1;
                        if coef != 0.0 {
                            for vi in [self.vars[i], self.vars[j], self.vars[k]] {
                                c[vi as usize] += coef * rule.weight(vi, 3);
                            }
                        }
                    }
                }
            }
        }
        c
    }

    fn into_polynomial(self) -> PolynomialObjective {
        let mut monomials = BTreeMap::new();
        monomials.insert(Vec::new(), self.c0);
        let v = self.vars.len();
        for i in 0..v {
            if self.c1[i] != 0.0 {
                monomials.insert(vec![self.vars[i]], self.c1[i]);
            }
        }
        if self.max_order >= 2 {
            let mut t = 0;
            for j in 1..v {
                for i in 0..j {
                    if self.c2[t] != 0.0 {
                        monomials.insert(vec![self.vars[i], self.vars[j]], self.c2[t]);
                    }
                    t += 1;
                }
            }
        }
        if self.max_order >= 3 {
            let mut t = 0;
            for k in 2..v {
                for j in 1..k {
                    for i in 0..j {
                        if self.c3[t] != 0.0 {
                            monomials
                                .insert(vec![self.vars[i], self.vars[j], self.vars[k]], self.c3[t]);
                        }
                        t += 1;
                    }
                }
            }
        }
        PolynomialObjective {
            monomials,
            max_order: self.max_order,
        }
    }
}

fn sort3(a: usize, b: usize, c: usize) -> (usize, usize, usize) {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    if c < lo {
        (c, lo, hi)
    } else if c < hi {
        (lo, c, hi)
    } else {
        (lo, hi, c)
    }
}

/// Either representation of the truncated expansion; dense for orders ≤ 3,
/// map-based beyond.
pub(crate) enum Expansion {
    Dense(DenseExpansion),
    Sparse(PolynomialObjective),
}

impl Expansion {
    pub fn linearize(&self, rule: &WeightRule, num_vars: usize) -> Vec<f64> {
        match self {
            Expansion::Dense(d) => d.linearize(rule, num_vars),
            Expansion::Sparse(p) => linearize(p, rule, num_vars),
        }
    }

    pub fn evaluate(&self, point: &[u8]) -> f64 {
        match self {
            Expansion::Dense(d) => d.evaluate(point),
            Expansion::Sparse(p) => p.evaluate(point),
        }
    }

    pub fn constant_term(&self) -> f64 {
        match self {
            Expansion::Dense(d) => d.constant_term(),
            Expansion::Sparse(p) => p.constant_term(),
        }
    }
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    acc as usize
}

pub(crate) fn expand(
    brackets: &[Bracket],
    max_order: usize,
    max_terms: usize,
) -> Result<Expansion, OptimizerError> {
    let mut vars: Vec<u32> = brackets
        .iter()
        .flat_map(|b| b.terms.iter().map(|t| t.0))
        .collect();
    vars.sort_unstable();
    vars.dedup();
    let v = vars.len();
    let estimated: usize = (0..=max_order.min(v))
        .map(|m| binomial(v, m))
        .fold(0, usize::saturating_add);
    if estimated > max_terms {
        return Err(OptimizerError::ExpansionTooLarge {
            estimated,
            limit: max_terms,
        });
    }
    if max_order <= 3 {
        let slot_of = |var: u32| vars.binary_search(&var).expect("var in universe");
        let mut dense = DenseExpansion::new(vars.clone(), max_order);
        let mut lookup = vec![0.0; v];
        let mut terms: Vec<(usize, f64)> = Vec::new();
        for b in brackets {
            terms.clear();
            terms.extend(b.terms.iter().map(|&(var, coef)| (slot_of(var), coef)));
            dense.multiply(b.constant, &terms, &mut lookup);
        }
        Ok(Expansion::Dense(dense))
    } else {
        let mut monomials: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        monomials.insert(Vec::new(), 1.0);
        for b in brackets {
            let mut next: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
            for (m, &coef) in &monomials {
                *next.entry(m.clone()).or_insert(0.0) += b.constant * coef;
                for &(var, bcoef) in &b.terms {
                    let mut m2 = m.clone();
                    if let Err(pos) = m2.binary_search(&var) {
                        m2.insert(pos, var);
                    }
                    if m2.len() <= max_order {
                        *next.entry(m2).or_insert(0.0) -= bcoef * coef;
                    }
                }
            }
            if next.len() > max_terms {
                return Err(OptimizerError::ExpansionTooLarge {
                    estimated: next.len(),
                    limit: max_terms,
                });
            }
            monomials = next;
        }
        Ok(Expansion::Sparse(PolynomialObjective {
            monomials,
            max_order,
        }))
    }
}

/// Truncated symbolic expansion of the interference product, merging like
/// terms and discarding monomials above `max_order`.
pub fn expand_objective(
    s: &Scenario,
    max_order: usize,
    max_terms: usize,
) -> Result<PolynomialObjective, OptimizerError> {
    let brackets = interference_brackets(s);
    match expand(&brackets, max_order, max_terms)? {
        Expansion::Dense(d) => Ok(d.into_polynomial()),
        Expansion::Sparse(p) => Ok(p),
    }
}

/// Expands generic affine brackets; entry point for tests and tools that
/// build products directly rather than from a scenario.
pub fn expand_product(
    factors: &[(f64, Vec<(u32, f64)>)],
    max_order: usize,
    max_terms: usize,
) -> Result<PolynomialObjective, OptimizerError> {
    let brackets: Vec<Bracket> = factors
        .iter()
        .map(|(constant, terms)| {
            let mut t = terms.clone();
            t.sort_unstable_by_key(|x| x.0);
            Bracket {
                constant: *constant,
                terms: t,
            }
        })
        .collect();
    match expand(&brackets, max_order, max_terms)? {
        Expansion::Dense(d) => Ok(d.into_polynomial()),
        Expansion::Sparse(p) => Ok(p),
    }
}

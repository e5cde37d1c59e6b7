//! Linear integer arithmetic with quantifiers, decided by Cooper's
//! quantifier elimination.
//!
//! Terms are linear expressions over integer variables; atoms are `t <= 0`
//! and divisibility-by-constant. Divisibility atoms never appear in
//! user-facing formulas; they are introduced by the elimination itself.

use std::collections::BTreeMap;

use num::bigint::BigInt;
use num::{Integer, One, Signed, Zero};

use crate::LangError;

pub type Var = usize;

/// A linear term `k + sum coeff_i * x_i` over integer variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub coeffs: BTreeMap<Var, BigInt>,
    pub constant: BigInt,
}

impl Term {
    pub fn constant(k: impl Into<BigInt>) -> Self {
        Term { coeffs: BTreeMap::new(), constant: k.into() }
    }

    pub fn var(v: Var) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(v, BigInt::one());
        Term { coeffs, constant: BigInt::zero() }
    }

    pub fn scaled_var(v: Var, c: impl Into<BigInt>) -> Self {
        Term::var(v).scale(&c.into())
    }

    pub fn add(&self, other: &Term) -> Term {
        let mut coeffs = self.coeffs.clone();
        for (v, c) in &other.coeffs {
            let e = coeffs.entry(*v).or_insert_with(BigInt::zero);
            *e += c;
            if e.is_zero() {
                coeffs.remove(v);
            }
        }
        Term { coeffs, constant: &self.constant + &other.constant }
    }

    pub fn neg(&self) -> Term {
        Term {
            coeffs: self.coeffs.iter().map(|(v, c)| (*v, -c)).collect(),
            constant: -&self.constant,
        }
    }

    pub fn sub(&self, other: &Term) -> Term {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: &BigInt) -> Term {
        if k.is_zero() {
            return Term::constant(0);
        }
        Term {
            coeffs: self.coeffs.iter().map(|(v, c)| (*v, c * k)).collect(),
            constant: &self.constant * k,
        }
    }

    pub fn plus_const(&self, k: impl Into<BigInt>) -> Term {
        let mut t = self.clone();
        t.constant += k.into();
        t
    }

    fn coeff_of(&self, v: Var) -> BigInt {
        self.coeffs.get(&v).cloned().unwrap_or_else(BigInt::zero)
    }

    fn is_const(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Substitute variable `v` by `t`.
    fn subst(&self, v: Var, t: &Term) -> Term {
        let c = self.coeff_of(v);
        if c.is_zero() {
            return self.clone();
        }
        let mut base = self.clone();
        base.coeffs.remove(&v);
        base.add(&t.scale(&c))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    True,
    False,
    /// term <= 0
    Leq(Term),
    /// d | term  (d >= 1)
    Dvd(BigInt, Term),
    /// not (d | term)
    NotDvd(BigInt, Term),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Exists(Var, Box<Formula>),
    Forall(Var, Box<Formula>),
}

pub fn leq(a: Term, b: Term) -> Formula {
    Formula::Leq(a.sub(&b))
}

pub fn lt(a: Term, b: Term) -> Formula {
    Formula::Leq(a.sub(&b).plus_const(1))
}

pub fn geq(a: Term, b: Term) -> Formula {
    leq(b, a)
}

pub fn eq(a: Term, b: Term) -> Formula {
    Formula::And(vec![leq(a.clone(), b.clone()), leq(b, a)])
}

pub fn and(fs: Vec<Formula>) -> Formula {
    Formula::And(fs)
}

pub fn or(fs: Vec<Formula>) -> Formula {
    Formula::Or(fs)
}

pub fn exists(v: Var, f: Formula) -> Formula {
    Formula::Exists(v, Box::new(f))
}

pub fn forall(v: Var, f: Formula) -> Formula {
    Formula::Forall(v, Box::new(f))
}

impl Formula {
    fn size(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Leq(_) | Formula::Dvd(..) | Formula::NotDvd(..) => 1,
            Formula::Not(f) | Formula::Exists(_, f) | Formula::Forall(_, f) => 1 + f.size(),
            Formula::And(fs) | Formula::Or(fs) => 1 + fs.iter().map(Formula::size).sum::<usize>(),
        }
    }

    fn subst(&self, v: Var, t: &Term) -> Formula {
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Leq(u) => Formula::Leq(u.subst(v, t)),
            Formula::Dvd(d, u) => Formula::Dvd(d.clone(), u.subst(v, t)),
            Formula::NotDvd(d, u) => Formula::NotDvd(d.clone(), u.subst(v, t)),
            Formula::Not(f) => Formula::Not(Box::new(f.subst(v, t))),
            Formula::And(fs) => Formula::And(fs.iter().map(|f| f.subst(v, t)).collect()),
            Formula::Or(fs) => Formula::Or(fs.iter().map(|f| f.subst(v, t)).collect()),
            Formula::Exists(w, f) if *w != v => Formula::Exists(*w, Box::new(f.subst(v, t))),
            Formula::Forall(w, f) if *w != v => Formula::Forall(*w, Box::new(f.subst(v, t))),
            Formula::Exists(..) | Formula::Forall(..) => self.clone(),
        }
    }
}

/// Constant folding and flattening. Keeps formulas small between
/// elimination rounds.
fn simplify(f: Formula) -> Formula {
    match f {
        Formula::Leq(t) => {
            if t.is_const() {
                if t.constant <= BigInt::zero() {
                    Formula::True
                } else {
                    Formula::False
                }
            } else {
                // gcd-reduce: g*u + k <= 0  <=>  u + ceil(k/g) <= 0
                let g = t
                    .coeffs
                    .values()
                    .fold(BigInt::zero(), |acc, c| acc.gcd(c));
                if g > BigInt::one() {
                    let coeffs = t.coeffs.iter().map(|(v, c)| (*v, c / &g)).collect();
                    // u <= -k/g, keep integer solutions: u <= floor(-k/g)
                    let bound = (-&t.constant).div_floor(&g);
                    Formula::Leq(Term { coeffs, constant: -bound })
                } else {
                    Formula::Leq(t)
                }
            }
        }
        Formula::Dvd(d, t) => {
            let d = d.abs();
            if d.is_one() {
                Formula::True
            } else if t.is_const() {
                if t.constant.mod_floor(&d).is_zero() {
                    Formula::True
                } else {
                    Formula::False
                }
            } else {
                Formula::Dvd(d, t)
            }
        }
        Formula::NotDvd(d, t) => match simplify(Formula::Dvd(d, t)) {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Dvd(d, t) => Formula::NotDvd(d, t),
            _ => unreachable!(),
        },
        Formula::Not(g) => match simplify(*g) {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            h => Formula::Not(Box::new(h)),
        },
        Formula::And(fs) => {
            let mut out = Vec::new();
            for g in fs {
                match simplify(g) {
                    Formula::True => {}
                    Formula::False => return Formula::False,
                    Formula::And(hs) => out.extend(hs),
                    h => out.push(h),
                }
            }
            out.dedup();
            match out.len() {
                0 => Formula::True,
                1 => out.pop().unwrap(),
                _ => Formula::And(out),
            }
        }
        Formula::Or(fs) => {
            let mut out = Vec::new();
            for g in fs {
                match simplify(g) {
                    Formula::False => {}
                    Formula::True => return Formula::True,
                    Formula::Or(hs) => out.extend(hs),
                    h => out.push(h),
                }
            }
            out.dedup();
            match out.len() {
                0 => Formula::False,
                1 => out.pop().unwrap(),
                _ => Formula::Or(out),
            }
        }
        Formula::Exists(v, g) => {
            let h = simplify(*g);
            match h {
                Formula::True => Formula::True,
                Formula::False => Formula::False,
                h => Formula::Exists(v, Box::new(h)),
            }
        }
        Formula::Forall(v, g) => {
            let h = simplify(*g);
            match h {
                Formula::True => Formula::True,
                Formula::False => Formula::False,
                h => Formula::Forall(v, Box::new(h)),
            }
        }
        other => other,
    }
}

/// Negation normal form over quantifier-free formulas.
fn nnf(f: Formula, negate: bool) -> Formula {
    match f {
        Formula::True => {
            if negate {
                Formula::False
            } else {
                Formula::True
            }
        }
        Formula::False => {
            if negate {
                Formula::True
            } else {
                Formula::False
            }
        }
        Formula::Leq(t) => {
            if negate {
                // not(t <= 0) <=> -t + 1 <= 0
                Formula::Leq(t.neg().plus_const(1))
            } else {
                Formula::Leq(t)
            }
        }
        Formula::Dvd(d, t) => {
            if negate {
                Formula::NotDvd(d, t)
            } else {
                Formula::Dvd(d, t)
            }
        }
        Formula::NotDvd(d, t) => {
            if negate {
                Formula::Dvd(d, t)
            } else {
                Formula::NotDvd(d, t)
            }
        }
        Formula::Not(g) => nnf(*g, !negate),
        Formula::And(fs) => {
            let parts = fs.into_iter().map(|g| nnf(g, negate)).collect();
            if negate {
                Formula::Or(parts)
            } else {
                Formula::And(parts)
            }
        }
        Formula::Or(fs) => {
            let parts = fs.into_iter().map(|g| nnf(g, negate)).collect();
            if negate {
                Formula::And(parts)
            } else {
                Formula::Or(parts)
            }
        }
        Formula::Exists(..) | Formula::Forall(..) => {
            panic!("nnf expects a quantifier-free formula")
        }
    }
}

fn lcm(a: &BigInt, b: &BigInt) -> BigInt {
    if a.is_zero() || b.is_zero() {
        return BigInt::one();
    }
    (a * b).abs() / a.gcd(b)
}

const DEFAULT_NODE_CAP: usize = 2_000_000;

/// Cooper elimination of `exists v. f` where `f` is quantifier-free.
fn eliminate_one(v: Var, f: Formula, cap: usize) -> Result<Formula, LangError> {
    let f = simplify(nnf(f, false));
    // lambda: lcm of |coefficients| of v across atoms
    let mut lambda = BigInt::one();
    let mut occurs = false;
    collect_coeffs(&f, v, &mut |c: &BigInt| {
        if !c.is_zero() {
            occurs = true;
            lambda = lcm(&lambda, c);
        }
    });
    if !occurs {
        return Ok(f);
    }
    // normalize coefficients of v to +-1 (conceptually substituting y = lambda*v)
    let normalized = normalize_coeffs(&f, v, &lambda);
    let with_div = if lambda.is_one() {
        normalized
    } else {
        Formula::And(vec![normalized, Formula::Dvd(lambda.clone(), Term::var(v))])
    };
    let with_div = simplify(with_div);

    // delta: lcm of divisors of atoms containing v
    let mut delta = BigInt::one();
    collect_divisors(&with_div, v, &mut |d: &BigInt| {
        delta = lcm(&delta, d);
    });

    // strict lower bounds b (b < v), from atoms -v + r <= 0 => b = r - 1
    let mut lowers: Vec<Term> = Vec::new();
    collect_lowers(&with_div, v, &mut lowers);
    lowers.dedup();

    let mut disjuncts: Vec<Formula> = Vec::new();
    let delta_i = big_to_usize(&delta).ok_or_else(|| {
        LangError::Resource("divisor lcm too large in quantifier elimination".into())
    })?;
    if delta_i > 1_000_000 {
        return Err(LangError::Resource(
            "divisor lcm too large in quantifier elimination".into(),
        ));
    }
    for j in 1..=delta_i {
        let minus_inf = minus_infinity(&with_div, v);
        let g = minus_inf.subst(v, &Term::constant(j as i64));
        disjuncts.push(simplify(g));
    }
    for b in &lowers {
        for j in 1..=delta_i {
            let g = with_div.subst(v, &b.plus_const(j as i64));
            disjuncts.push(simplify(g));
        }
    }
    let result = simplify(Formula::Or(disjuncts));
    if result.size() > cap {
        return Err(LangError::Resource(format!(
            "quantifier elimination exceeded node cap ({} nodes)",
            result.size()
        )));
    }
    Ok(result)
}

fn big_to_usize(b: &BigInt) -> Option<usize> {
    use num::ToPrimitive;
    b.to_usize()
}

fn collect_coeffs(f: &Formula, v: Var, visit: &mut impl FnMut(&BigInt)) {
    match f {
        Formula::Leq(t) | Formula::Dvd(_, t) | Formula::NotDvd(_, t) => visit(&t.coeff_of(v)),
        Formula::Not(g) => collect_coeffs(g, v, visit),
        Formula::And(fs) | Formula::Or(fs) => {
            for g in fs {
                collect_coeffs(g, v, visit);
            }
        }
        _ => {}
    }
}

/// Rescale every atom so that the coefficient of `v` becomes +-lambda,
/// then retype it as +-1 (substituting y = lambda * v).
fn normalize_coeffs(f: &Formula, v: Var, lambda: &BigInt) -> Formula {
    match f {
        Formula::Leq(t) => {
            let c = t.coeff_of(v);
            if c.is_zero() {
                Formula::Leq(t.clone())
            } else {
                let m = lambda / c.abs();
                let scaled = t.scale(&m);
                // coefficient of v is now +-lambda; rewrite as +-1
                let mut u = scaled.clone();
                let sign = if scaled.coeff_of(v).is_positive() {
                    BigInt::one()
                } else {
                    -BigInt::one()
                };
                u.coeffs.insert(v, sign);
                Formula::Leq(u)
            }
        }
        Formula::Dvd(d, t) | Formula::NotDvd(d, t) => {
            let c = t.coeff_of(v);
            let build = |d: BigInt, t: Term| match f {
                Formula::Dvd(..) => Formula::Dvd(d, t),
                _ => Formula::NotDvd(d, t),
            };
            if c.is_zero() {
                build(d.clone(), t.clone())
            } else {
                let m = lambda / c.abs();
                let mut scaled = t.scale(&m);
                let d2 = d * &m;
                // flip sign so v's coefficient is +1
                if scaled.coeff_of(v).is_negative() {
                    scaled = scaled.neg();
                }
                scaled.coeffs.insert(v, BigInt::one());
                build(d2, scaled)
            }
        }
        Formula::Not(g) => Formula::Not(Box::new(normalize_coeffs(g, v, lambda))),
        Formula::And(fs) => Formula::And(fs.iter().map(|g| normalize_coeffs(g, v, lambda)).collect()),
        Formula::Or(fs) => Formula::Or(fs.iter().map(|g| normalize_coeffs(g, v, lambda)).collect()),
        other => other.clone(),
    }
}

fn collect_divisors(f: &Formula, v: Var, visit: &mut impl FnMut(&BigInt)) {
    match f {
        Formula::Dvd(d, t) | Formula::NotDvd(d, t) => {
            if !t.coeff_of(v).is_zero() {
                visit(d);
            }
        }
        Formula::Not(g) => collect_divisors(g, v, visit),
        Formula::And(fs) | Formula::Or(fs) => {
            for g in fs {
                collect_divisors(g, v, visit);
            }
        }
        _ => {}
    }
}

fn collect_lowers(f: &Formula, v: Var, out: &mut Vec<Term>) {
    match f {
        Formula::Leq(t) => {
            let c = t.coeff_of(v);
            if c == -BigInt::one() {
                // -v + r <= 0  =>  r - 1 < v
                let mut r = t.clone();
                r.coeffs.remove(&v);
                out.push(r.plus_const(-1));
            }
        }
        Formula::Not(g) => collect_lowers(g, v, out),
        Formula::And(fs) | Formula::Or(fs) => {
            for g in fs {
                collect_lowers(g, v, out);
            }
        }
        _ => {}
    }
}

/// The "minus infinity" projection: upper-bound atoms on v become true,
/// lower-bound atoms become false; divisibility atoms survive.
fn minus_infinity(f: &Formula, v: Var) -> Formula {
    match f {
        Formula::Leq(t) => {
            let c = t.coeff_of(v);
            if c.is_zero() {
                f.clone()
            } else if c.is_positive() {
                Formula::True
            } else {
                Formula::False
            }
        }
        Formula::Not(g) => Formula::Not(Box::new(minus_infinity(g, v))),
        Formula::And(fs) => Formula::And(fs.iter().map(|g| minus_infinity(g, v)).collect()),
        Formula::Or(fs) => Formula::Or(fs.iter().map(|g| minus_infinity(g, v)).collect()),
        other => other.clone(),
    }
}

/// Eliminate all quantifiers, innermost first.
pub fn eliminate_quantifiers(f: &Formula) -> Result<Formula, LangError> {
    eliminate_rec(f, DEFAULT_NODE_CAP)
}

fn eliminate_rec(f: &Formula, cap: usize) -> Result<Formula, LangError> {
    Ok(match f {
        Formula::Exists(v, g) => {
            let inner = eliminate_rec(g, cap)?;
            eliminate_one(*v, inner, cap)?
        }
        Formula::Forall(v, g) => {
            let inner = eliminate_rec(g, cap)?;
            let negated = simplify(nnf(inner, true));
            let elim = eliminate_one(*v, negated, cap)?;
            simplify(nnf(elim, true))
        }
        Formula::Not(g) => simplify(Formula::Not(Box::new(eliminate_rec(g, cap)?))),
        Formula::And(fs) => {
            let mut out = Vec::new();
            for g in fs {
                out.push(eliminate_rec(g, cap)?);
            }
            simplify(Formula::And(out))
        }
        Formula::Or(fs) => {
            let mut out = Vec::new();
            for g in fs {
                out.push(eliminate_rec(g, cap)?);
            }
            simplify(Formula::Or(out))
        }
        atom => simplify(atom.clone()),
    })
}

/// Decide a closed formula.
pub fn decide(f: &Formula) -> Result<bool, LangError> {
    match eliminate_quantifiers(f)? {
        Formula::True => Ok(true),
        Formula::False => Ok(false),
        other => Err(LangError::Internal(format!(
            "free variables remain after elimination: {:?}",
            other
        ))),
    }
}

/// Evaluate a formula under a total assignment; inner quantifiers are
/// decided by elimination.
pub fn eval_under(f: &Formula, assignment: &BTreeMap<Var, BigInt>) -> Result<bool, LangError> {
    let mut g = f.clone();
    for (v, val) in assignment {
        g = g.subst(*v, &Term::constant(val.clone()));
    }
    decide(&g)
}

/// For a sentence `exists x1 .. exists xk. phi`, return a satisfying
/// assignment for the outermost existential block when the sentence is
/// true. The search is staged by increasing max-norm over a signed grid
/// and terminates because the sentence was first decided true.
pub fn decide_with_model(f: &Formula) -> Result<(bool, Option<BTreeMap<Var, BigInt>>), LangError> {
    if !decide(f)? {
        return Ok((false, None));
    }
    // peel outermost existential block
    let mut vars = Vec::new();
    let mut body = f;
    while let Formula::Exists(v, g) = body {
        vars.push(*v);
        body = g;
    }
    if vars.is_empty() {
        return Ok((true, Some(BTreeMap::new())));
    }
    let mut bound: i64 = 0;
    loop {
        if let Some(model) = search_model(body, &vars, bound)? {
            return Ok((true, Some(model)));
        }
        bound += 1;
        if bound > 1_000 {
            return Err(LangError::Resource(
                "model search exceeded norm bound 1000".into(),
            ));
        }
    }
}

fn search_model(
    body: &Formula,
    vars: &[Var],
    bound: i64,
) -> Result<Option<BTreeMap<Var, BigInt>>, LangError> {
    // enumerate assignments with max |value| == bound (new shell only)
    let mut assignment = BTreeMap::new();
    search_rec(body, vars, 0, bound, false, &mut assignment)
}

fn search_rec(
    body: &Formula,
    vars: &[Var],
    idx: usize,
    bound: i64,
    shell_hit: bool,
    assignment: &mut BTreeMap<Var, BigInt>,
) -> Result<Option<BTreeMap<Var, BigInt>>, LangError> {
    if idx == vars.len() {
        if !shell_hit && bound > 0 {
            return Ok(None); // covered by a smaller shell
        }
        if eval_under(body, assignment)? {
            return Ok(Some(assignment.clone()));
        }
        return Ok(None);
    }
    for raw in -bound..=bound {
        assignment.insert(vars[idx], BigInt::from(raw));
        let hit = shell_hit || raw.abs() == bound;
        if let Some(m) = search_rec(body, vars, idx + 1, bound, hit, assignment)? {
            return Ok(Some(m));
        }
    }
    assignment.remove(&vars[idx]);
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(k: i64) -> Term {
        Term::constant(k)
    }

    #[test]
    fn exists_double_equals_four() {
        // exists x. 2x = 4
        let x = 0;
        let f = exists(x, eq(Term::scaled_var(x, 2), c(4)));
        let (sat, model) = decide_with_model(&f).unwrap();
        assert!(sat);
        assert_eq!(model.unwrap()[&x], BigInt::from(2));
    }

    #[test]
    fn forall_has_successor() {
        // forall x. exists y. y = x + 1 and y > x
        let (x, y) = (0, 1);
        let f = forall(
            x,
            exists(
                y,
                and(vec![
                    eq(Term::var(y), Term::var(x).plus_const(1)),
                    lt(Term::var(x), Term::var(y)),
                ]),
            ),
        );
        assert!(decide(&f).unwrap());
    }

    #[test]
    fn exists_even_odd() {
        let x = 0;
        // exists x. 2 | x and x = 3  -> false
        let f = exists(
            x,
            and(vec![Formula::Dvd(BigInt::from(2), Term::var(x)), eq(Term::var(x), c(3))]),
        );
        assert!(!decide(&f).unwrap());
    }

    #[test]
    fn unbounded_below_with_divisibility() {
        let x = 0;
        // exists x. x <= 5 and 3 | x
        let f = exists(
            x,
            and(vec![leq(Term::var(x), c(5)), Formula::Dvd(BigInt::from(3), Term::var(x))]),
        );
        assert!(decide(&f).unwrap());
    }

    #[test]
    fn no_integer_between() {
        let x = 0;
        // exists x. 0 < x and x < 1 -> false
        let f = exists(x, and(vec![lt(c(0), Term::var(x)), lt(Term::var(x), c(1))]));
        assert!(!decide(&f).unwrap());
    }

    #[test]
    fn coefficient_normalization() {
        let (x, y) = (0, 1);
        // forall y. (exists x. 3x = y) -> (6 | 2y)
        let f = forall(
            y,
            or(vec![
                Formula::Not(Box::new(exists(x, eq(Term::scaled_var(x, 3), Term::var(y))))),
                Formula::Dvd(BigInt::from(6), Term::scaled_var(y, 2)),
            ]),
        );
        assert!(decide(&f).unwrap());
    }
}

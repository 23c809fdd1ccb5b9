//! Periodic orbits of constant-roof suspensions over subshifts of finite
//! type: exact census `t -> v(t)` and the growth-rate bound check.

use num_bigint::{BigInt, BigUint};
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::entropy::EntropyReport;
use crate::error::{Error, Result};
use crate::num::Real;
use crate::output::fmt17;

/// Subshift of finite type with a constant roof.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Sft<T = f64> {
    pub alphabet: usize,
    pub adjacency: Vec<Vec<u8>>,
    pub roof: T,
}

impl<T: Real> Sft<T> {
    pub fn new(adjacency: Vec<Vec<u8>>, roof: T) -> Result<Self> {
        let m = adjacency.len();
        if m == 0 || m > u8::MAX as usize + 1 {
            return Err(Error::invalid(format!("alphabet size {m} out of range")));
        }
        if adjacency.iter().any(|row| row.len() != m) {
            return Err(Error::invalid("adjacency matrix must be square"));
        }
        if adjacency.iter().flatten().any(|&a| a > 1) {
            return Err(Error::invalid("adjacency entries must be 0 or 1"));
        }
        if adjacency.iter().flatten().all(|&a| a == 0) {
            return Err(Error::invalid("adjacency matrix allows no transition"));
        }
        if !(roof > T::zero()) || !roof.is_finite() {
            return Err(Error::invalid(format!("roof must be positive, got {roof}")));
        }
        Ok(Self { alphabet: m, adjacency, roof })
    }

    pub fn full_shift(m: usize, roof: T) -> Result<Self> {
        Self::new(vec![vec![1; m]; m], roof)
    }

    /// Sequences with no two consecutive 1s.
    pub fn golden_mean(roof: T) -> Result<Self> {
        Self::new(vec![vec![1, 1], vec![1, 0]], roof)
    }

    pub fn fixed_letter(roof: T) -> Result<Self> {
        Self::new(vec![vec![1]], roof)
    }

    #[inline]
    pub fn allowed(&self, a: u8, b: u8) -> bool {
        self.adjacency[a as usize][b as usize] == 1
    }

    pub fn is_admissible(&self, word: &[u8]) -> bool {
        word.iter().all(|&s| (s as usize) < self.alphabet) && word.windows(2).all(|w| self.allowed(w[0], w[1]))
    }

    /// All admissible words of the given length, in lexicographic order.
    pub fn admissible_words(&self, len: usize) -> Vec<Vec<u8>> {
        let mut out = Vec::new();
        if len == 0 {
            out.push(Vec::new());
            return out;
        }
        let mut word = Vec::with_capacity(len);
        self.extend_words(&mut word, len, &mut out);
        out
    }

    fn extend_words(&self, word: &mut Vec<u8>, len: usize, out: &mut Vec<Vec<u8>>) {
        if word.len() == len {
            out.push(word.clone());
            return;
        }
        for s in 0..self.alphabet as u8 {
            if word.last().is_none_or(|&p| self.allowed(p, s)) {
                word.push(s);
                self.extend_words(word, len, out);
                word.pop();
            }
        }
    }

    /// `trace(A^n)` for `n = 1..=n_max`, exact.
    pub fn traces(&self, n_max: usize) -> Vec<BigUint> {
        let m = self.alphabet;
        let a: Vec<Vec<BigUint>> =
            self.adjacency.iter().map(|r| r.iter().map(|&x| BigUint::from(x)).collect()).collect();
        let mut power = a.clone();
        let mut out = Vec::with_capacity(n_max);
        for n in 1..=n_max {
            if n > 1 {
                power = matmul(&power, &a, m);
            }
            out.push((0..m).map(|i| power[i][i].clone()).sum());
        }
        out
    }
}

fn matmul(x: &[Vec<BigUint>], y: &[Vec<BigUint>], m: usize) -> Vec<Vec<BigUint>> {
    let mut z = vec![vec![BigUint::zero(); m]; m];
    for i in 0..m {
        for k in 0..m {
            if x[i][k].is_zero() {
                continue;
            }
            for j in 0..m {
                if !y[k][j].is_zero() {
                    z[i][j] += &x[i][k] * &y[k][j];
                }
            }
        }
    }
    z
}

/// Möbius function by trial division.
pub fn mobius(mut n: usize) -> i32 {
    assert!(n >= 1);
    let mut result = 1;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return 0;
            }
            result = -result;
        }
        p += 1;
    }
    if n > 1 {
        result = -result;
    }
    result
}

mod bigstr {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CensusRow<T = f64> {
    /// Symbolic period (word length).
    pub n: usize,
    #[serde(with = "bigstr")]
    pub points_of_period_n: BigUint,
    #[serde(with = "bigstr")]
    pub least_period_orbits: BigUint,
    pub flow_period: T,
    #[serde(with = "bigstr")]
    pub v_cumulative: BigUint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct OrbitCensus<T = f64> {
    pub sft: Sft<T>,
    pub t_max: T,
    pub rows: Vec<CensusRow<T>>,
}

/// Slack for comparing flow periods `n * roof` against real thresholds.
fn period_slack<T: Real>(t: T) -> T {
    T::lit(1e-9) * t.abs().max(T::one())
}

/// Periodic-orbit census of the suspension flow up to `t_max`.
pub fn orbit_census<T: Real>(sft: &Sft<T>, t_max: T) -> Result<OrbitCensus<T>> {
    if !(t_max >= sft.roof) {
        return Err(Error::invalid(format!("t_max {t_max} must be at least the roof {}", sft.roof)));
    }
    let n_max = ((t_max + period_slack(t_max)) / sft.roof).floor().to_usize().unwrap_or(0);
    let traces = sft.traces(n_max);
    let mut rows = Vec::with_capacity(n_max);
    let mut cumulative = BigUint::zero();
    for n in 1..=n_max {
        let mut acc = BigInt::zero();
        for d in (1..=n).filter(|d| n % d == 0) {
            match mobius(n / d) {
                1 => acc += BigInt::from(traces[d - 1].clone()),
                -1 => acc -= BigInt::from(traces[d - 1].clone()),
                _ => {}
            }
        }
        let n_big = BigInt::from(n);
        debug_assert!((&acc % &n_big).is_zero(), "Möbius sum not divisible by n");
        let least = (acc / n_big).to_biguint().expect("orbit count is nonnegative");
        cumulative += &least;
        rows.push(CensusRow {
            n,
            points_of_period_n: traces[n - 1].clone(),
            least_period_orbits: least,
            flow_period: T::from_usize_lossy(n) * sft.roof,
            v_cumulative: cumulative.clone(),
        });
    }
    Ok(OrbitCensus { sft: sft.clone(), t_max, rows })
}

impl<T: Real> OrbitCensus<T> {
    /// Number of periodic orbits with period `<= t`.
    pub fn v(&self, t: T) -> BigUint {
        let lim = t + period_slack(t);
        self.rows
            .iter()
            .take_while(|r| r.flow_period <= lim)
            .last()
            .map(|r| r.v_cumulative.clone())
            .unwrap_or_default()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,trace,least_period_orbits,flow_period,v_cumulative\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                r.n,
                r.points_of_period_n,
                r.least_period_orbits,
                fmt17(r.flow_period.as_f64()),
                r.v_cumulative
            ));
        }
        s
    }
}

/// Orbits with flow period in `[t_star - rho, t_star + rho]`.
pub fn census_window<T: Real>(census: &OrbitCensus<T>, t_star: T, rho: T) -> Result<BigUint> {
    if t_star < T::zero() || rho < T::zero() {
        return Err(Error::invalid("t_star and rho must be nonnegative"));
    }
    let hi = t_star + rho;
    if hi > census.t_max + period_slack(census.t_max) {
        return Err(Error::invalid(format!("window end {hi} exceeds census horizon {}", census.t_max)));
    }
    let lo = t_star - rho;
    let (lo, hi) = (lo - period_slack(lo), hi + period_slack(hi));
    Ok(census
        .rows
        .iter()
        .filter(|r| r.flow_period >= lo && r.flow_period <= hi)
        .map(|r| r.least_period_orbits.clone())
        .sum())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GrowthRate<T = f64> {
    pub t_max: T,
    pub rate: T,
    /// `(t, (1/t) log v(t))` at every flow period with `v(t) > 0`.
    pub series: Vec<(T, T)>,
}

pub fn growth_rate<T: Real>(census: &OrbitCensus<T>) -> Result<GrowthRate<T>> {
    let last = census.rows.last().ok_or(Error::NoOrbits)?;
    if last.v_cumulative.is_zero() {
        return Err(Error::NoOrbits);
    }
    if census.rows.len() < 3 {
        return Err(Error::invalid(format!("growth rate needs at least 3 census rows, got {}", census.rows.len())));
    }
    let log_v = |v: &BigUint| T::lit(v.to_f64().expect("count fits f64").ln());
    let series = census
        .rows
        .iter()
        .filter(|r| !r.v_cumulative.is_zero())
        .map(|r| (r.flow_period, log_v(&r.v_cumulative) / r.flow_period))
        .collect();
    let t_max = census.t_max;
    Ok(GrowthRate { t_max, rate: log_v(&census.v(t_max)) / t_max, series })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GrowthBoundVerdict<T = f64> {
    pub growth_rate: T,
    pub e_star_estimate: T,
    pub slack: T,
    pub pass: bool,
    /// Comparison against the classical entropy estimate, when one is given.
    pub classical_estimate: Option<T>,
    pub classical_pass: Option<bool>,
}

/// `growth_rate <= e* + slack`.
pub fn check_growth_bound<T: Real>(
    census: &OrbitCensus<T>,
    e_star: &EntropyReport<T>,
    slack: T,
    classical: Option<&EntropyReport<T>>,
) -> Result<GrowthBoundVerdict<T>> {
    let g = growth_rate(census)?.rate;
    Ok(GrowthBoundVerdict {
        growth_rate: g,
        e_star_estimate: e_star.estimate,
        slack,
        pass: g <= e_star.estimate + slack,
        classical_estimate: classical.map(|c| c.estimate),
        classical_pass: classical.map(|c| g <= c.estimate + slack),
    })
}

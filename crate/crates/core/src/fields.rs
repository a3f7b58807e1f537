//! Builtin fields: the counterexample families of the mushroom and comb
//! domains and a few smooth test families.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{CombSpec, CombTag, Domain, MushroomSpec, RegionLabel, RegionTag};

#[derive(Clone, Debug, PartialEq)]
pub enum FieldDescriptor {
    Thm53,
    Sec6(usize),
    Sec7(usize),
    Poly(u32),
    Trig(f64),
    Const(f64),
}

impl fmt::Display for FieldDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldDescriptor::Thm53 => write!(f, "thm53"),
            FieldDescriptor::Sec6(k) => write!(f, "sec6:{k}"),
            FieldDescriptor::Sec7(k) => write!(f, "sec7:{k}"),
            FieldDescriptor::Poly(d) => write!(f, "poly:{d}"),
            FieldDescriptor::Trig(w) => write!(f, "trig:{w}"),
            FieldDescriptor::Const(c) => write!(f, "const:{c}"),
        }
    }
}

impl FromStr for FieldDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::invalid(format!(
                "unknown field '{s}' (expected thm53|sec6:k|sec7:k|poly:d|trig:w|const:c)"
            ))
        };
        let (name, arg) = match s.split_once(':') {
            Some((a, b)) => (a, Some(b)),
            None => (s, None),
        };
        match (name, arg) {
            ("thm53", None) => Ok(FieldDescriptor::Thm53),
            ("sec6", Some(a)) => Ok(FieldDescriptor::Sec6(a.parse().map_err(|_| bad())?)),
            ("sec7", Some(a)) => Ok(FieldDescriptor::Sec7(a.parse().map_err(|_| bad())?)),
            ("poly", Some(a)) => Ok(FieldDescriptor::Poly(a.parse().map_err(|_| bad())?)),
            ("trig", Some(a)) => Ok(FieldDescriptor::Trig(a.parse().map_err(|_| bad())?)),
            ("const", Some(a)) => Ok(FieldDescriptor::Const(a.parse().map_err(|_| bad())?)),
            _ => Err(bad()),
        }
    }
}

impl FieldDescriptor {
    /// Instantiates the field on a domain.
    pub fn build(&self, domain: &Domain) -> Result<Box<dyn ScalarField>> {
        let n = domain.dim();
        match (self, domain) {
            (FieldDescriptor::Thm53, Domain::Mushroom(s)) => Ok(Box::new(Thm53Field::new(s))),
            (FieldDescriptor::Sec7(k), Domain::Mushroom(s)) => Ok(Box::new(Sec7Field::new(s, *k)?)),
            (FieldDescriptor::Sec6(k), Domain::Comb(c)) => Ok(Box::new(Sec6Field::new(c, *k)?)),
            (FieldDescriptor::Poly(d), _) => Ok(Box::new(PolyField { n, degree: *d })),
            (FieldDescriptor::Trig(w), _) => Ok(Box::new(TrigField { n, freq: *w })),
            (FieldDescriptor::Const(c), _) => Ok(Box::new(ConstField { n, c: *c })),
            (d, _) => Err(Error::invalid(format!("field {d} is not defined on this domain type"))),
        }
    }
}

fn axial_only(n: usize, g: f64) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[n - 1] = g;
    v
}

/// Zero on the cube, `A_k (x_n - 1)` on stem `k`, `A_k` on head `k`, with
/// `A_k = (4^k)^{(n-1)/q}`.
pub struct Thm53Field {
    spec: MushroomSpec,
}

impl Thm53Field {
    pub fn new(spec: &MushroomSpec) -> Self {
        Self { spec: spec.clone() }
    }

    /// `log2 A_k`.
    pub fn log2_amplitude(&self, k: usize) -> f64 {
        2.0 * k as f64 * (self.spec.n - 1) as f64 / self.spec.q
    }

    fn locate(&self, x: &[f64]) -> RegionTag {
        let n = self.spec.n;
        let xn = x[n - 1];
        if xn < 1.0 {
            return RegionTag::Cube;
        }
        for k in 1..=self.spec.m {
            let s = self.spec.radial(k, x);
            if xn <= 2.0 && s <= self.spec.stem_radius(k) {
                return RegionTag::Stem(k);
            }
            if xn >= 2.0 && s <= self.spec.head_radius(k) {
                return RegionTag::Head(k);
            }
        }
        RegionTag::Outside
    }

    fn tag(&self, x: &[f64], hint: &RegionLabel) -> RegionTag {
        match hint {
            RegionLabel::Mushroom(t @ (RegionTag::Cube | RegionTag::Stem(_) | RegionTag::Head(_))) => *t,
            _ => self.locate(x),
        }
    }

    fn log2_abs_tagged(&self, x: &[f64], tag: RegionTag) -> f64 {
        let xn = x[self.spec.n - 1];
        match tag {
            RegionTag::Stem(k) => self.log2_amplitude(k) + (xn - 1.0).abs().log2(),
            RegionTag::Head(k) => self.log2_amplitude(k),
            _ => f64::NEG_INFINITY,
        }
    }

    fn value_tagged(&self, x: &[f64], tag: RegionTag) -> f64 {
        let xn = x[self.spec.n - 1];
        match tag {
            RegionTag::Stem(k) => self.log2_amplitude(k).exp2() * (xn - 1.0),
            RegionTag::Head(k) => self.log2_amplitude(k).exp2(),
            _ => 0.0,
        }
    }

    fn gradient_tagged(&self, tag: RegionTag) -> Vec<f64> {
        match tag {
            RegionTag::Stem(k) => axial_only(self.spec.n, self.log2_amplitude(k).exp2()),
            _ => vec![0.0; self.spec.n],
        }
    }
}

impl ScalarField for Thm53Field {
    fn dim(&self) -> usize {
        self.spec.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.value_tagged(x, self.locate(x))
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.gradient_tagged(self.locate(x))
    }

    fn has_analytic_gradient(&self) -> bool {
        true
    }

    fn axisymmetric(&self) -> bool {
        true
    }

    fn name(&self) -> String {
        "thm53".into()
    }

    fn value_hinted(&self, x: &[f64], hint: &RegionLabel) -> f64 {
        self.value_tagged(x, self.tag(x, hint))
    }

    fn gradient_hinted(&self, x: &[f64], hint: &RegionLabel) -> Vec<f64> {
        self.gradient_tagged(self.tag(x, hint))
    }

    fn log2_abs_hinted(&self, x: &[f64], hint: &RegionLabel) -> f64 {
        self.log2_abs_tagged(x, self.tag(x, hint))
    }

    fn log2_grad_norm_hinted(&self, x: &[f64], hint: &RegionLabel) -> f64 {
        match self.tag(x, hint) {
            RegionTag::Stem(k) => self.log2_amplitude(k),
            _ => f64::NEG_INFINITY,
        }
    }
}

/// One on head `k`, the ramp `x_n - 1` on stem `k`, zero elsewhere.
pub struct Sec7Field {
    spec: MushroomSpec,
    k: usize,
}

impl Sec7Field {
    pub fn new(spec: &MushroomSpec, k: usize) -> Result<Self> {
        if k == 0 || k > spec.m {
            return Err(Error::invalid(format!("sec7 index {k} outside 1..={}", spec.m)));
        }
        Ok(Self { spec: spec.clone(), k })
    }

    fn tag(&self, x: &[f64], hint: &RegionLabel) -> RegionTag {
        match hint {
            RegionLabel::Mushroom(t @ (RegionTag::Cube | RegionTag::Stem(_) | RegionTag::Head(_))) => *t,
            _ => {
                let xn = x[self.spec.n - 1];
                let s = self.spec.radial(self.k, x);
                if (1.0..=2.0).contains(&xn) && s <= self.spec.stem_radius(self.k) {
                    RegionTag::Stem(self.k)
                } else if xn >= 2.0 && s <= self.spec.head_radius(self.k) {
                    RegionTag::Head(self.k)
                } else {
                    RegionTag::Cube
                }
            }
        }
    }

    fn value_tagged(&self, x: &[f64], tag: RegionTag) -> f64 {
        match tag {
            RegionTag::Stem(j) if j == self.k => x[self.spec.n - 1] - 1.0,
            RegionTag::Head(j) if j == self.k => 1.0,
            _ => 0.0,
        }
    }

    fn gradient_tagged(&self, tag: RegionTag) -> Vec<f64> {
        match tag {
            RegionTag::Stem(j) if j == self.k => axial_only(self.spec.n, 1.0),
            _ => vec![0.0; self.spec.n],
        }
    }
}

impl ScalarField for Sec7Field {
    fn dim(&self) -> usize {
        self.spec.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.value_tagged(x, self.tag(x, &RegionLabel::Named(String::new())))
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.gradient_tagged(self.tag(x, &RegionLabel::Named(String::new())))
    }

    fn has_analytic_gradient(&self) -> bool {
        true
    }

    fn axisymmetric(&self) -> bool {
        true
    }

    fn name(&self) -> String {
        format!("sec7:{}", self.k)
    }

    fn value_hinted(&self, x: &[f64], hint: &RegionLabel) -> f64 {
        self.value_tagged(x, self.tag(x, hint))
    }

    fn gradient_hinted(&self, x: &[f64], hint: &RegionLabel) -> Vec<f64> {
        self.gradient_tagged(self.tag(x, hint))
    }
}

/// Zero off cylinder `k`, one on its lower half, the ramp `-2 x_n` on its upper half.
pub struct Sec6Field {
    comb: CombSpec,
    k: usize,
}

impl Sec6Field {
    pub fn new(comb: &CombSpec, k: usize) -> Result<Self> {
        if k == 0 || k > comb.kmax {
            return Err(Error::invalid(format!("sec6 index {k} outside 1..={}", comb.kmax)));
        }
        Ok(Self { comb: comb.clone(), k })
    }

    fn tag(&self, x: &[f64], hint: &RegionLabel) -> CombTag {
        match hint {
            RegionLabel::Comb(t) => *t,
            _ => self.comb.classify(x),
        }
    }

    fn value_tagged(&self, x: &[f64], tag: CombTag) -> f64 {
        match tag {
            CombTag::Cyl(j) if j == self.k => -2.0 * x[self.comb.n - 1],
            CombTag::HalfCyl(j) if j == self.k => 1.0,
            _ => 0.0,
        }
    }

    fn gradient_tagged(&self, tag: CombTag) -> Vec<f64> {
        match tag {
            CombTag::Cyl(j) if j == self.k => axial_only(self.comb.n, -2.0),
            _ => vec![0.0; self.comb.n],
        }
    }
}

impl ScalarField for Sec6Field {
    fn dim(&self) -> usize {
        self.comb.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.value_tagged(x, self.comb.classify(x))
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.gradient_tagged(self.comb.classify(x))
    }

    fn has_analytic_gradient(&self) -> bool {
        true
    }

    fn axisymmetric(&self) -> bool {
        true
    }

    fn name(&self) -> String {
        format!("sec6:{}", self.k)
    }

    fn value_hinted(&self, x: &[f64], hint: &RegionLabel) -> f64 {
        self.value_tagged(x, self.tag(x, hint))
    }

    fn gradient_hinted(&self, x: &[f64], hint: &RegionLabel) -> Vec<f64> {
        self.gradient_tagged(self.tag(x, hint))
    }
}

/// `1 + Σ_i x_i^d / i`.
pub struct PolyField {
    pub n: usize,
    pub degree: u32,
}

impl ScalarField for PolyField {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        1.0 + x
            .iter()
            .enumerate()
            .map(|(i, v)| v.powi(self.degree as i32) / (i + 1) as f64)
            .sum::<f64>()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let d = self.degree as i32;
        x.iter()
            .enumerate()
            .map(|(i, v)| {
                if d == 0 {
                    0.0
                } else {
                    d as f64 * v.powi(d - 1) / (i + 1) as f64
                }
            })
            .collect()
    }

    fn has_analytic_gradient(&self) -> bool {
        true
    }

    fn axisymmetric(&self) -> bool {
        self.degree == 0
    }

    fn name(&self) -> String {
        format!("poly:{}", self.degree)
    }
}

/// `cos(w · Σ_i x_i)`.
pub struct TrigField {
    pub n: usize,
    pub freq: f64,
}

impl ScalarField for TrigField {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.freq * x.iter().sum::<f64>()).cos()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let g = -self.freq * (self.freq * x.iter().sum::<f64>()).sin();
        vec![g; self.n]
    }

    fn has_analytic_gradient(&self) -> bool {
        true
    }

    fn axisymmetric(&self) -> bool {
        self.freq == 0.0
    }

    fn name(&self) -> String {
        format!("trig:{}", self.freq)
    }
}

pub struct ConstField {
    pub n: usize,
    pub c: f64,
}

impl ScalarField for ConstField {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, _x: &[f64]) -> f64 {
        self.c
    }

    fn gradient(&self, _x: &[f64]) -> Vec<f64> {
        vec![0.0; self.n]
    }

    fn has_analytic_gradient(&self) -> bool {
        true
    }

    fn axisymmetric(&self) -> bool {
        true
    }

    fn name(&self) -> String {
        format!("const:{}", self.c)
    }
}

/// The smooth family used by the operator-norm sweep.
pub fn smooth_family() -> Vec<FieldDescriptor> {
    vec![
        FieldDescriptor::Const(1.0),
        FieldDescriptor::Poly(1),
        FieldDescriptor::Poly(2),
        FieldDescriptor::Trig(1.0),
        FieldDescriptor::Trig(3.0),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::central_difference;
    use rand::{Rng, SeedableRng};

    fn mushroom() -> MushroomSpec {
        MushroomSpec::build(3, 5.0, 1.0, 3).unwrap()
    }

    #[test]
    fn parse_round_trip() {
        for s in ["thm53", "sec6:3", "sec7:2", "poly:2", "trig:1.5", "const:-2"] {
            let d: FieldDescriptor = s.parse().unwrap();
            assert_eq!(d.to_string(), s);
        }
        assert!("thm53:1".parse::<FieldDescriptor>().is_err());
        assert!("poly".parse::<FieldDescriptor>().is_err());
        assert!("bessel:1".parse::<FieldDescriptor>().is_err());
    }

    #[test]
    fn thm53_examples() {
        let s = mushroom();
        let f = Thm53Field::new(&s);
        assert_eq!(f.value(&[0.5, 0.5, 0.5]), 0.0);
        let z = s.center(2).to_vec();
        assert_eq!(f.value(&[z[0], z[1], 1.5]), 128.0);
        assert_eq!(f.gradient(&[z[0], z[1], 1.5]), vec![0.0, 0.0, 256.0]);
        let z1 = s.center(1);
        assert_eq!(f.value(&[z1[0], z1[1], 2.5]), 16.0);
        // hint resolves stems that Cartesian coordinates cannot
        let deep = MushroomSpec::build(3, 5.0, 1.0, 40).unwrap();
        let g = Thm53Field::new(&deep);
        let x = [deep.center(40)[0] + 1e-12, deep.center(40)[1], 1.5];
        assert_eq!(g.value(&x), 0.0);
        let h = RegionLabel::Mushroom(RegionTag::Stem(40));
        assert_eq!(g.log2_abs_hinted(&x, &h), 160.0 - 1.0);
        assert_eq!(g.log2_grad_norm_hinted(&x, &h), 160.0);
    }

    #[test]
    fn sec_fields() {
        let s = mushroom();
        let f = Sec7Field::new(&s, 1).unwrap();
        let z = s.center(1);
        assert_eq!(f.value(&[z[0], z[1], 2.5]), 1.0);
        assert_eq!(f.value(&[z[0], z[1], 1.5]), 0.5);
        assert_eq!(f.value(&[0.9, 0.1, 0.5]), 0.0);
        assert!(Sec7Field::new(&s, 4).is_err());
        let c = CombSpec::build(3, 5, false).unwrap();
        let u = Sec6Field::new(&c, 1).unwrap();
        assert_eq!(u.value(&[10.0, 0.5, 0.5]), 0.0);
        assert_eq!(u.value(&[1.0, 0.0, -0.75]), 1.0);
        assert_eq!(u.value(&[1.0, 0.0, -0.25]), 0.5);
        assert_eq!(u.value(&[8.5, 0.0, -0.25]), 0.0);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let s = mushroom();
        let dom = Domain::Mushroom(s.clone());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let smooth: Vec<Box<dyn ScalarField>> = smooth_family().iter().map(|d| d.build(&dom).unwrap()).collect();
        for f in &smooth {
            for _ in 0..1000 {
                let x: Vec<f64> = (0..3).map(|_| rng.random::<f64>() * 3.0).collect();
                let g = f.gradient(&x);
                let fd = central_difference(&|y: &[f64]| f.value(y), &x, 1e-6);
                let scale = crate::field::norm(&g).max(1.0);
                for i in 0..3 {
                    assert!((g[i] - fd[i]).abs() < 1e-6 * scale, "{} at {x:?}", f.name());
                }
            }
        }
        // piecewise fields inside their pieces
        let t = Thm53Field::new(&s);
        let z = s.center(1);
        for _ in 0..1000 {
            let a: f64 = rng.random::<f64>() * std::f64::consts::TAU;
            let rad = rng.random::<f64>() * 0.5 * s.stem_radius(1);
            let x = [
                z[0] + rad * a.cos(),
                z[1] + rad * a.sin(),
                1.05 + 0.9 * rng.random::<f64>(),
            ];
            let h = 1e-6 * s.stem_radius(1);
            let fd = central_difference(&|y: &[f64]| t.value(y), &x, h);
            let g = t.gradient(&x);
            assert!((fd[2] - g[2]).abs() < 1e-6 * g[2]);
        }
    }
}

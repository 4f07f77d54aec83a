//! Name-keyed builders for every pluggable strategy: engines, functionals,
//! h-weights, integrands, nonlinearities, functional sequences, self-maps
//! and domains.
//!
//! A strategy is written in configs as `{"name": "...", <params>}`. Each
//! builder deserializes its own parameters and rejects unknown keys.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::applications::{
    Affine, Cubic, Dirichlet, Identity, IntegrandRef, LinearG, NonlinearityRef, PDirichlet, QuasilinearEnergy,
    SaturatedWeight, SelfMap, SemilinearEnergy, Zero,
};
use crate::applications::semilinear::default_box;
use crate::domain::{Cone, CoordBox, Domain, DomainRef, HalfSpace, Ray, Whole};
use crate::error::{Result, SymError};
use crate::functional::{Boxed, Functional, FunctionalRef, Linear, NormProfile, Profile, Sum};
use crate::grid::{GridSpace, NormKind};
use crate::principles::constrained::ConstraintSet;
use crate::principles::dgz::Bump;
use crate::principles::path::PathProblem;
use crate::principles::symmetric::{ConstantSequence, FunctionalSequence, VanishingPerturbation};
use crate::principles::zhong::{Weight, WeightKind};
use crate::principles::{
    constrained_symmetric_ekeland, dgz_check, ekeland_point, path_minimax, sqps_sequence, symmetric_borwein_preiss,
    symmetric_ekeland, symmetric_ekeland_gamma, symmetric_zhong, Certificate, EkelandVariant,
};
use crate::principles::engine::Setup;

/// A strategy reference: registered name plus its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Named {
    pub name: String,
    #[serde(flatten)]
    pub params: Map<String, Value>,
}

impl Named {
    pub fn new(name: &str) -> Self {
        Named { name: name.into(), params: Map::new() }
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        self.params.insert(key.into(), serde_json::to_value(value).expect("serializable parameter"));
        self
    }
}

type Builder<T, C> = Box<dyn Fn(&C, &Map<String, Value>) -> Result<Arc<T>> + Send + Sync>;

pub struct Registry<T: ?Sized, C> {
    kind: &'static str,
    entries: BTreeMap<&'static str, Builder<T, C>>,
}

impl<T: ?Sized, C> Registry<T, C> {
    pub fn new(kind: &'static str) -> Self {
        Registry { kind, entries: BTreeMap::new() }
    }

    pub fn register(
        &mut self,
        name: &'static str,
        build: impl Fn(&C, &Map<String, Value>) -> Result<Arc<T>> + Send + Sync + 'static,
    ) {
        self.entries.insert(name, Box::new(build));
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn build(&self, ctx: &C, spec: &Named) -> Result<Arc<T>> {
        let b = self.entries.get(spec.name.as_str()).ok_or_else(|| SymError::UnknownName {
            kind: self.kind.into(),
            name: spec.name.clone(),
            known: self.names().join(", "),
        })?;
        b(ctx, &spec.params).map_err(|e| match e {
            SymError::InvalidArgument(m) => SymError::InvalidArgument(format!("{} `{}`: {m}", self.kind, spec.name)),
            other => other,
        })
    }
}

/// Typed view of a parameter map; unknown or missing keys are errors.
pub fn params<P: DeserializeOwned>(map: &Map<String, Value>) -> Result<P> {
    serde_json::from_value(Value::Object(map.clone())).map_err(|e| SymError::InvalidArgument(e.to_string()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NoParams {}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Coef {
    k: f64,
}

pub fn integrands() -> Registry<dyn crate::applications::Integrand, ()> {
    let mut r = Registry::new("integrand");
    r.register("dirichlet", |_, m| {
        params::<NoParams>(m)?;
        Ok(Arc::new(Dirichlet) as IntegrandRef)
    });
    r.register("p-dirichlet", |_, m| {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct P {
            p: f64,
        }
        let P { p } = params(m)?;
        Ok(Arc::new(PDirichlet { p }) as IntegrandRef)
    });
    r.register("saturated-weight", |_, m| {
        let Coef { k } = params(m)?;
        Ok(Arc::new(SaturatedWeight { k }) as IntegrandRef)
    });
    r
}

pub fn nonlinearities() -> Registry<dyn crate::applications::Nonlinearity, ()> {
    let mut r = Registry::new("nonlinearity");
    r.register("zero", |_, m| {
        params::<NoParams>(m)?;
        Ok(Arc::new(Zero) as NonlinearityRef)
    });
    r.register("linear", |_, m| {
        let Coef { k } = params(m)?;
        Ok(Arc::new(LinearG { k }) as NonlinearityRef)
    });
    r.register("cubic", |_, m| {
        let Coef { k } = params(m)?;
        Ok(Arc::new(Cubic { k }) as NonlinearityRef)
    });
    r
}

pub fn weights() -> Registry<dyn Weight, ()> {
    let mut r = Registry::new("weight");
    for (name, w) in [("zero", WeightKind::Zero), ("linear", WeightKind::Linear), ("quadratic", WeightKind::Quadratic)] {
        r.register(name, move |_, m| {
            params::<NoParams>(m)?;
            Ok(Arc::new(w) as Arc<dyn Weight>)
        });
    }
    r
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Centered {
    norm: NormKind,
    #[serde(default)]
    center: Option<Vec<f64>>,
}

/// Box half-width for the semilinear energy: a number or "default".
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HalfWidth {
    Value(f64),
    Keyword(String),
}

impl HalfWidth {
    pub fn resolve(&self, space: &GridSpace) -> Result<f64> {
        match self {
            HalfWidth::Value(v) if *v > 0.0 => Ok(*v),
            HalfWidth::Keyword(k) if k == "default" => Ok(default_box(space)),
            other => Err(SymError::InvalidArgument(format!("box half-width {other:?} is not positive or \"default\""))),
        }
    }
}

pub fn functionals() -> Registry<dyn Functional, Arc<GridSpace>> {
    let mut r: Registry<dyn Functional, Arc<GridSpace>> = Registry::new("functional");
    fn profile(space: &Arc<GridSpace>, m: &Map<String, Value>, p: Profile) -> Result<FunctionalRef> {
        let Centered { norm, center } = params(m)?;
        Ok(Arc::new(NormProfile::new(space, norm, center, p)?))
    }
    r.register("power", |s, m| {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct P {
            norm: NormKind,
            #[serde(default)]
            center: Option<Vec<f64>>,
            coef: f64,
            exponent: f64,
        }
        let p: P = params(m)?;
        Ok(Arc::new(NormProfile::new(s, p.norm, p.center, Profile::Power { coef: p.coef, exponent: p.exponent })?)
            as FunctionalRef)
    });
    r.register("squared-distance", |s, m| profile(s, m, Profile::Power { coef: 1.0, exponent: 2.0 }));
    r.register("double-well", |s, m| profile(s, m, Profile::DoubleWell));
    r.register("mountain-pass", |s, m| profile(s, m, Profile::MountainPass));
    r.register("soft-quartic", |s, m| profile(s, m, Profile::SoftQuartic));
    r.register("linear", |s, m| {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct P {
            density: Vec<f64>,
        }
        let P { density } = params(m)?;
        if density.len() != s.n_cells() {
            return Err(SymError::InvalidArgument(format!("density has {} values for {} cells", density.len(), s.n_cells())));
        }
        Ok(Arc::new(Linear::from_density(s, &density)) as FunctionalRef)
    });
    r.register("quasilinear", |s, m| {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct P {
            integrand: Named,
            #[serde(default)]
            forcing: f64,
        }
        let p: P = params(m)?;
        let i = integrands().build(&(), &p.integrand)?;
        crate::applications::quasilinear::check_integrand(i.as_ref(), 1024, 0)?;
        Ok(Arc::new(QuasilinearEnergy::new(s, i, p.forcing)) as FunctionalRef)
    });
    r.register("semilinear", |s, m| {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct P {
            nonlinearity: Named,
            #[serde(default, rename = "box")]
            half_width: Option<HalfWidth>,
        }
        let p: P = params(m)?;
        let nl = nonlinearities().build(&(), &p.nonlinearity)?;
        let e: FunctionalRef = Arc::new(SemilinearEnergy::new(s, nl));
        match p.half_width {
            Some(h) => {
                let w = h.resolve(s)?;
                Ok(Arc::new(Boxed::new(e, -w, w)?) as FunctionalRef)
            }
            None => Ok(e),
        }
    });
    r.register("sum", |s, m| {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct P {
            parts: Vec<Named>,
        }
        let P { parts } = params(m)?;
        let reg = functionals();
        let parts = parts.iter().map(|p| reg.build(s, p)).collect::<Result<Vec<_>>>()?;
        Ok(Arc::new(Sum::new(parts)) as FunctionalRef)
    });
    r
}

/// Sequences are built around a base functional on a grid.
pub fn sequences() -> Registry<dyn FunctionalSequence, (Arc<GridSpace>, FunctionalRef)> {
    let mut r: Registry<dyn FunctionalSequence, (Arc<GridSpace>, FunctionalRef)> = Registry::new("sequence");
    r.register("constant", |(_, f), m| {
        params::<NoParams>(m)?;
        Ok(Arc::new(ConstantSequence(f.clone())) as Arc<dyn FunctionalSequence>)
    });
    r.register("vanishing-perturbation", |(s, f), m| {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct P {
            tau: f64,
        }
        let P { tau } = params(m)?;
        if !(tau >= 0.0) {
            return Err(SymError::InvalidArgument("tau must be nonnegative".into()));
        }
        Ok(Arc::new(VanishingPerturbation { base: f.clone(), space: s.clone(), tau }) as Arc<dyn FunctionalSequence>)
    });
    r
}

pub fn maps() -> Registry<dyn SelfMap, Arc<GridSpace>> {
    let mut r: Registry<dyn SelfMap, Arc<GridSpace>> = Registry::new("map");
    r.register("identity", |_, m| {
        params::<NoParams>(m)?;
        Ok(Arc::new(Identity) as Arc<dyn SelfMap>)
    });
    r.register("scaling", |s, m| {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct P {
            sigma: f64,
        }
        let P { sigma } = params(m)?;
        Ok(Arc::new(Affine::scaling(s.n_cells(), sigma)) as Arc<dyn SelfMap>)
    });
    r.register("affine", |s, m| {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct P {
            anchor: Vec<f64>,
            sigma: f64,
        }
        let P { anchor, sigma } = params(m)?;
        if anchor.len() != s.n_cells() {
            return Err(SymError::InvalidArgument(format!("anchor has {} values for {} cells", anchor.len(), s.n_cells())));
        }
        Ok(Arc::new(Affine { anchor, sigma }) as Arc<dyn SelfMap>)
    });
    r
}

pub fn domains() -> Registry<dyn Domain, Arc<GridSpace>> {
    let mut r: Registry<dyn Domain, Arc<GridSpace>> = Registry::new("domain");
    r.register("whole", |_, m| {
        params::<NoParams>(m)?;
        Ok(Arc::new(Whole) as DomainRef)
    });
    r.register("cone", |_, m| {
        params::<NoParams>(m)?;
        Ok(Arc::new(Cone) as DomainRef)
    });
    r.register("box", |_, m| {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct P {
            lo: f64,
            hi: f64,
        }
        let P { lo, hi } = params(m)?;
        if !(lo <= hi) {
            return Err(SymError::InvalidArgument("box needs lo <= hi".into()));
        }
        Ok(Arc::new(CoordBox { lo, hi }) as DomainRef)
    });
    r.register("half-space", |s, m| {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct P {
            normal: Vec<f64>,
            level: f64,
        }
        let P { normal, level } = params(m)?;
        if normal.len() != s.n_cells() {
            return Err(SymError::InvalidArgument("normal has the wrong length".into()));
        }
        Ok(Arc::new(HalfSpace { normal, level }) as DomainRef)
    });
    r.register("ray", |s, m| {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct P {
            start: Vec<f64>,
            dir: Vec<f64>,
        }
        let P { start, dir } = params(m)?;
        if start.len() != s.n_cells() || dir.len() != s.n_cells() {
            return Err(SymError::InvalidArgument("ray start and dir need one value per cell".into()));
        }
        Ok(Arc::new(Ray { start, dir }) as DomainRef)
    });
    r
}

/// A variational-principle engine: functional and start point in, one or
/// more certificates out.
pub trait Engine: Send + Sync {
    fn name(&self) -> String;
    fn run(&self, f: FunctionalRef, setup: &Setup, u0: &[f64]) -> Result<Vec<Certificate>>;
}

struct FnEngine<R: Fn(FunctionalRef, &Setup, &[f64]) -> Result<Vec<Certificate>> + Send + Sync> {
    label: String,
    run: R,
}

impl<R: Fn(FunctionalRef, &Setup, &[f64]) -> Result<Vec<Certificate>> + Send + Sync> Engine for FnEngine<R> {
    fn name(&self) -> String {
        self.label.clone()
    }
    fn run(&self, f: FunctionalRef, setup: &Setup, u0: &[f64]) -> Result<Vec<Certificate>> {
        (self.run)(f, setup, u0)
    }
}

fn engine(
    label: String,
    run: impl Fn(FunctionalRef, &Setup, &[f64]) -> Result<Vec<Certificate>> + Send + Sync + 'static,
) -> Arc<dyn Engine> {
    Arc::new(FnEngine { label, run })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SigmaRho {
    sigma: f64,
    rho: f64,
}

pub fn engines() -> Registry<dyn Engine, ()> {
    let mut r: Registry<dyn Engine, ()> = Registry::new("engine");
    r.register("ekeland", |_, m| {
        let SigmaRho { sigma, rho } = params(m)?;
        Ok(engine("ekeland".into(), move |f, s, u0| Ok(vec![ekeland_point(f.as_ref(), s, u0, sigma, rho)?])))
    });
    r.register("symmetric-ekeland", |_, m| {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct P {
            variant: EkelandVariant,
            sigma: f64,
            rho: f64,
        }
        let P { variant, sigma, rho } = params(m)?;
        Ok(engine(format!("symmetric-ekeland {variant:?}"), move |f, s, u0| {
            Ok(vec![symmetric_ekeland(f.as_ref(), s, u0, sigma, rho, variant)?])
        }))
    });
    r.register("symmetric-ekeland-gamma", |_, m| {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct P {
            sequence: Named,
            sigma: f64,
            rho: f64,
            #[serde(default = "one")]
            h0: usize,
            #[serde(default)]
            y: Option<Vec<Vec<f64>>>,
        }
        let p: P = params(m)?;
        Ok(engine(format!("symmetric-ekeland-gamma ({})", p.sequence.name), move |f, s, u0| {
            let seq = sequences().build(&(s.space.clone(), f), &p.sequence)?;
            let y = p.y.clone().unwrap_or_else(|| vec![u0.to_vec()]);
            Ok(vec![symmetric_ekeland_gamma(seq.as_ref(), s, &y, p.sigma, p.rho, p.h0)?])
        }))
    });
    r.register("borwein-preiss", |_, m| {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct P {
            sigma: f64,
            rho: f64,
            p: f64,
        }
        let P { sigma, rho, p } = params(m)?;
        Ok(engine("borwein-preiss".into(), move |f, s, u0| {
            Ok(vec![symmetric_borwein_preiss(f.as_ref(), s, u0, sigma, rho, p)?])
        }))
    });
    r.register("zhong", |_, m| {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct P {
            weight: Named,
            sigma: f64,
            rho: f64,
        }
        let p: P = params(m)?;
        let h = weights().build(&(), &p.weight)?;
        let (sigma, rho) = (p.sigma, p.rho);
        Ok(engine(format!("zhong ({})", h.name()), move |f, s, u0| {
            Ok(vec![symmetric_zhong(f.as_ref(), s, u0, sigma, rho, h.clone())?])
        }))
    });
    r.register("dgz", |_, m| {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct P {
            epsilon: f64,
            /// Radius of a bump perturbation centred at the start point.
            #[serde(default)]
            bump_delta: Option<f64>,
        }
        let P { epsilon, bump_delta } = params(m)?;
        Ok(engine("dgz".into(), move |f, s, u0| {
            let bump = bump_delta.map(|d| Bump::around(u0, epsilon, d));
            Ok(vec![dgz_check(f.as_ref(), s, u0, bump.as_ref(), epsilon)])
        }))
    });
    r.register("constrained", |_, m| {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct P {
            constraints: Vec<Named>,
            #[serde(default)]
            n_eq: usize,
            epsilon: f64,
        }
        let p: P = params(m)?;
        Ok(engine("constrained".into(), move |f, s, u0| {
            let reg = functionals();
            let g = p.constraints.iter().map(|c| reg.build(&s.space, c)).collect::<Result<Vec<_>>>()?;
            let set = Arc::new(ConstraintSet::new(g, p.n_eq, s.metric.clone())?);
            Ok(vec![constrained_symmetric_ekeland(f.as_ref(), set, s, u0, p.epsilon)?])
        }))
    });
    r.register("path-minimax", |_, m| {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct P {
            segments: usize,
            epsilon: f64,
            #[serde(default)]
            c_reference: Option<f64>,
        }
        let p: P = params(m)?;
        // the start point is the path end psi
        Ok(engine("path-minimax".into(), move |f, s, u0| {
            let problem = PathProblem { f, psi: u0.to_vec(), segments: p.segments, epsilon: p.epsilon, c_reference: p.c_reference };
            Ok(vec![path_minimax(&problem, s)?])
        }))
    });
    r.register("sqps", |_, m| {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct P {
            schedule: Vec<f64>,
        }
        let P { schedule } = params(m)?;
        Ok(engine("sqps".into(), move |f, s, u0| {
            Ok(sqps_sequence(f.as_ref(), s, u0, &schedule)?.into_iter().map(|st| st.certificate).collect())
        }))
    });
    r
}

fn one() -> usize {
    1
}

//! Entropy and expansivity of continuous flows on metric spaces.
//!
//! Flows are evaluated through [`FlowSpec`], sampled on finite clouds
//! standing in for compact sets, and measured with scale functions that may
//! vary from point to point. Everything numerical is generic over the scalar
//! (`f32` or `f64`); the `*64` and `*32` aliases below fix it.

pub mod entropy;
pub mod error;
pub mod expansivity;
pub mod fixtures;
pub mod flow;
pub mod num;
pub mod output;
pub mod periodic;
pub mod point;
pub mod sample;
pub mod scale;
pub mod separation;
pub mod space;
pub mod suites;

pub use entropy::{
    estimate_e_star, estimate_entropy_compact, verify_identity, EntropyMode, EntropyReport, Identity,
    IdentityInstance, IdentityVerdict, StarMode, Tolerance,
};
pub use error::{Error, Result};
pub use expansivity::{falsify, ExpansivityVerdict, Notion, SearchConfig, SearchResult, Witness};
pub use fixtures::{build_fixture, list_fixtures, Fixture, FixtureParams};
pub use flow::{conjugate_flow, Conjugacy, FlowSpec, Singularities};
pub use num::Real;
pub use periodic::{check_growth_bound, growth_rate, orbit_census, OrbitCensus, Sft};
pub use point::{Point, SymbolicPoint};
pub use sample::CompactSample;
pub use scale::{refine_scale, ScaleFn, ScaleKind};
pub use separation::{beta, max_separated_set, min_spanning_set, separation_report, OrbitTable, SeparationReport};
pub use space::{Discreteness, MetricSpace};

pub type Point64 = Point<f64>;
pub type Point32 = Point<f32>;
pub type FlowSpec64 = FlowSpec<f64>;
pub type FlowSpec32 = FlowSpec<f32>;
pub type MetricSpace64 = MetricSpace<f64>;
pub type MetricSpace32 = MetricSpace<f32>;
pub type CompactSample64 = CompactSample<f64>;
pub type CompactSample32 = CompactSample<f32>;
pub type ScaleFn64 = ScaleFn<f64>;
pub type ScaleFn32 = ScaleFn<f32>;
pub type Sft64 = Sft<f64>;
pub type Sft32 = Sft<f32>;
pub type EntropyReport64 = EntropyReport<f64>;
pub type EntropyReport32 = EntropyReport<f32>;
pub type Fixture64 = Fixture<f64>;
pub type Fixture32 = Fixture<f32>;

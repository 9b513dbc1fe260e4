//! JSON instance and solution files. Rationals are written as `"p/q"`.

use serde::{Deserialize, Serialize};

use crate::generate::Instance;
use crate::instance::{
    validate_metric, KtsppInstance, MetricInstance, NodeId, OtspInstance, SolutionPaths,
    SolutionTour,
};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IoError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
}

impl From<serde_json::Error> for IoError {
    fn from(e: serde_json::Error) -> Self {
        IoError::Parse { line: e.line(), column: e.column(), message: e.to_string() }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceFile {
    #[serde(rename = "type")]
    kind: String,
    n: usize,
    names: Vec<String>,
    cost: Vec<Vec<Rational>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    order: Option<Vec<NodeId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pairs: Option<Vec<[NodeId; 2]>>,
}

pub fn write_instance(inst: &Instance) -> Vec<u8> {
    let m = inst.metric();
    let (kind, order, pairs) = match inst {
        Instance::Otsp(i) => ("otsp", Some(i.order.clone()), None),
        Instance::Ktspp(i) => ("ktspp", None, Some(i.pairs.iter().map(|&(s, t)| [s, t]).collect())),
    };
    let file = InstanceFile {
        kind: kind.into(),
        n: m.n(),
        names: m.names().to_vec(),
        cost: m.matrix().to_vec(),
        order,
        pairs,
    };
    serde_json::to_vec_pretty(&file).expect("instance serializes")
}

pub fn read_instance(bytes: &[u8]) -> Result<Instance, IoError> {
    let file: InstanceFile = serde_json::from_slice(bytes)?;
    let invalid = |s: String| IoError::InvalidInstance(s);
    if file.names.len() != file.n {
        return Err(invalid(format!("n = {} but {} names", file.n, file.names.len())));
    }
    let metric = MetricInstance::new(file.names, file.cost).map_err(|e| invalid(e.to_string()))?;
    if let Some(v) = validate_metric(&metric).first() {
        return Err(invalid(format!("metric violation: {v}")));
    }
    match file.kind.as_str() {
        "otsp" => {
            let order = file.order.ok_or_else(|| invalid("otsp instance without \"order\"".into()))?;
            Ok(Instance::Otsp(OtspInstance::new(metric, order).map_err(|e| invalid(e.to_string()))?))
        }
        "ktspp" => {
            let pairs = file.pairs.ok_or_else(|| invalid("ktspp instance without \"pairs\"".into()))?;
            let pairs = pairs.into_iter().map(|[s, t]| (s, t)).collect();
            Ok(Instance::Ktspp(KtsppInstance::new(metric, pairs).map_err(|e| invalid(e.to_string()))?))
        }
        other => Err(invalid(format!("unknown type {other:?}"))),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Solution {
    Tour(SolutionTour),
    Paths(SolutionPaths),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum SolutionFile {
    Otsp {
        tour: Vec<NodeId>,
        #[serde(rename = "totalCost")]
        total_cost: Rational,
    },
    Ktspp {
        paths: Vec<Vec<NodeId>>,
        #[serde(rename = "totalCost")]
        total_cost: Rational,
    },
}

pub fn solution_json(sol: &Solution) -> serde_json::Value {
    let file = match sol {
        Solution::Tour(t) => SolutionFile::Otsp { tour: t.tour.clone(), total_cost: t.total_cost.clone() },
        Solution::Paths(p) => SolutionFile::Ktspp { paths: p.paths.clone(), total_cost: p.total_cost.clone() },
    };
    serde_json::to_value(file).expect("solution serializes")
}

pub fn write_solution(sol: &Solution) -> Vec<u8> {
    serde_json::to_vec_pretty(&solution_json(sol)).expect("solution serializes")
}

pub fn read_solution(bytes: &[u8]) -> Result<Solution, IoError> {
    Ok(match serde_json::from_slice::<SolutionFile>(bytes)? {
        SolutionFile::Otsp { tour, total_cost } => Solution::Tour(SolutionTour { tour, total_cost }),
        SolutionFile::Ktspp { paths, total_cost } => Solution::Paths(SolutionPaths { paths, total_cost }),
    })
}

//! Line-oriented text serialization of an instance: a `key=value` header, the
//! ground truth, then one edge triple per line. Discrete phases are written
//! as grid indices, continuous phases as shortest round-trip decimals.

use std::io::{BufRead, Write};

use super::{AngleMode, GroundTruth, ModelParams, ObservationMatrix, Phases, RNG_NAME};
use crate::error::{Error, Result};

const MAGIC: &str = "sbmph-instance v1";

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub params: ModelParams,
    pub truth: GroundTruth,
    pub observation: ObservationMatrix,
}

impl Instance {
    pub fn generate(params: &ModelParams) -> Result<Self> {
        let (truth, observation) = super::generate(params)?;
        Ok(Self { params: params.clone(), truth, observation })
    }
}

fn phase_token(phases: &Phases, i: usize) -> String {
    match phases {
        Phases::Grid { index, .. } => index[i].to_string(),
        Phases::Radians(r) => format!("{:?}", r[i]),
    }
}

pub fn write_instance<W: Write>(inst: &Instance, mut w: W) -> Result<()> {
    let p = &inst.params;
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "n={}", p.n)?;
    writeln!(w, "m={}", p.m)?;
    writeln!(w, "k_max={}", p.k_max)?;
    writeln!(w, "mode={}", p.mode.as_str())?;
    writeln!(w, "seed={}", p.seed)?;
    writeln!(w, "p={:?}", p.p)?;
    writeln!(w, "q={:?}", p.q)?;
    writeln!(w, "rng={RNG_NAME}")?;
    writeln!(w, "truth {}", inst.truth.n())?;
    for i in 0..inst.truth.n() {
        writeln!(w, "{} {} {}", i, inst.truth.assignment[i], phase_token(&inst.truth.phases, i))?;
    }
    let obs = &inst.observation;
    writeln!(w, "edges {}", obs.num_edges())?;
    for (e, &(i, j)) in obs.edges().iter().enumerate() {
        writeln!(w, "{} {} {}", i, j, phase_token(obs.phases(), e))?;
    }
    w.flush()?;
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R> Lines<R> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { line: self.line, msg: msg.into() }
    }
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<String> {
        self.line += 1;
        match self.inner.next() {
            Some(l) => Ok(l?),
            None => Err(self.err("unexpected end of file")),
        }
    }

    fn key<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let l = self.next_line()?;
        let v = l
            .strip_prefix(key)
            .and_then(|r| r.strip_prefix('='))
            .ok_or_else(|| self.err(format!("expected `{key}=...`")))?;
        v.trim().parse().map_err(|_| self.err(format!("bad value for `{key}`")))
    }

    fn section(&mut self, name: &str) -> Result<usize> {
        let l = self.next_line()?;
        let mut it = l.split_whitespace();
        if it.next() != Some(name) {
            return Err(self.err(format!("expected `{name} <count>`")));
        }
        it.next()
            .and_then(|c| c.parse().ok())
            .ok_or_else(|| self.err("bad section count"))
    }

    fn fields<const K: usize>(&mut self) -> Result<[String; K]> {
        let l = self.next_line()?;
        let parts: Vec<String> = l.split_whitespace().map(str::to_owned).collect();
        parts.try_into().map_err(|_| self.err(format!("expected {K} fields")))
    }
}

fn parse<T: std::str::FromStr, R>(lines: &Lines<R>, s: &str) -> Result<T> {
    s.parse().map_err(|_| lines.err(format!("cannot parse `{s}`")))
}

pub fn read_instance<R: BufRead>(r: R) -> Result<Instance> {
    let mut lines = Lines { inner: r.lines(), line: 0 };
    if lines.next_line()?.trim() != MAGIC {
        return Err(lines.err("missing instance header"));
    }
    let n: usize = lines.key("n")?;
    let m: usize = lines.key("m")?;
    let k_max: usize = lines.key("k_max")?;
    let mode: AngleMode = lines.key("mode")?;
    let seed: u64 = lines.key("seed")?;
    let p: f64 = lines.key("p")?;
    let q: f64 = lines.key("q")?;
    let rng: String = lines.key("rng")?;
    if rng != RNG_NAME {
        return Err(lines.err(format!("instance was generated with `{rng}`, expected `{RNG_NAME}`")));
    }
    let params = ModelParams { n, m, p, q, k_max, mode, seed };
    params.validate()?;
    let grid = params.grid_size();

    let read_phase = |lines: &Lines<R>, tok: &str, idx: &mut Vec<u32>, rad: &mut Vec<f64>| -> Result<()> {
        match mode {
            AngleMode::Discrete => {
                let t: u32 = parse(lines, tok)?;
                if t as usize >= grid {
                    return Err(lines.err("grid index out of range"));
                }
                idx.push(t);
            }
            AngleMode::Continuous => rad.push(parse(lines, tok)?),
        }
        Ok(())
    };
    let build = |idx: Vec<u32>, rad: Vec<f64>| match mode {
        AngleMode::Discrete => Phases::Grid { size: grid, index: idx },
        AngleMode::Continuous => Phases::Radians(rad),
    };

    if lines.section("truth")? != n {
        return Err(lines.err("truth count differs from n"));
    }
    let mut assignment = Vec::with_capacity(n);
    let (mut idx, mut rad) = (Vec::new(), Vec::new());
    for i in 0..n {
        let [node, cluster, phase] = lines.fields::<3>()?;
        if parse::<usize, _>(&lines, &node)? != i {
            return Err(lines.err("truth rows must be in node order"));
        }
        let c: usize = parse(&lines, &cluster)?;
        if c >= m {
            return Err(lines.err("cluster id out of range"));
        }
        assignment.push(c);
        read_phase(&lines, &phase, &mut idx, &mut rad)?;
    }
    let truth = GroundTruth { m, assignment, phases: build(idx, rad) };
    if truth.clusters().iter().any(|c| c.len() != params.cluster_size()) {
        return Err(lines.err("ground truth clusters are not balanced"));
    }

    let count = lines.section("edges")?;
    let mut edges = Vec::with_capacity(count);
    let (mut idx, mut rad) = (Vec::new(), Vec::new());
    for _ in 0..count {
        let [i, j, phase] = lines.fields::<3>()?;
        edges.push((parse(&lines, &i)?, parse(&lines, &j)?));
        read_phase(&lines, &phase, &mut idx, &mut rad)?;
    }
    let observation = ObservationMatrix::new(n, edges, build(idx, rad))?;
    Ok(Instance { params, truth, observation })
}

//! Loads the system under study from a preset or spec files.

use cms_core::families::{preset, Preset};
use cms_core::spec::{parse_potential, parse_shift, PotentialSpec};
use cms_core::thermo::{partition_sums, partition_sums_renewal, PartitionSums};
use cms_core::{LoopCounts, Potential, ReturnLaw, TransitionSystem};

use crate::config::{Settings, SourceSpec};
use crate::error::CliError;

pub struct Graph {
    pub system: TransitionSystem,
    pub potential: Potential,
}

/// A system with whatever closed-form data its source provides.
pub struct Source {
    pub label: String,
    pub graph: Option<Graph>,
    /// Aggregate return law of the abstract family.
    pub law: Option<ReturnLaw>,
    /// Abstract loop counts, for the topological entropy.
    pub loops: Option<LoopCounts>,
}

impl Source {
    pub fn load(settings: &Settings) -> Result<Self, CliError> {
        Self::load_full(settings).map(Source::truncated)
    }

    fn load_full(settings: &Settings) -> Result<Self, CliError> {
        match &settings.source {
            None => Err(CliError::Config("no system given: pass --preset or --shift".into())),
            Some(SourceSpec::Preset(name)) => {
                let p = preset(name, settings.truncate)?;
                let loops = Some(p.loops().without_override());
                match p {
                    Preset::Graph(b) => Ok(Source {
                        label: name.clone(),
                        law: Some(b.law),
                        loops,
                        graph: Some(Graph {
                            system: b.system,
                            potential: b.potential,
                        }),
                    }),
                    Preset::Abstract { law, .. } => Ok(Source {
                        label: name.clone(),
                        graph: None,
                        law: Some(law),
                        loops,
                    }),
                }
            }
            Some(SourceSpec::Files { shift, potential }) => {
                let read = |p: &std::path::Path| {
                    std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))
                };
                let mut spec = parse_shift(&read(shift)?).map_err(|e| in_file(shift, e))?;
                if let Some(l) = settings.truncate {
                    spec = spec.with_truncation(l);
                }
                let system = spec.build().map_err(|e| in_file(shift, e))?;
                let pot = match potential {
                    Some(p) => parse_potential(&read(p)?).map_err(|e| in_file(p, e))?,
                    None => PotentialSpec::default(),
                };
                let (phi, law) = pot.build(&spec).map_err(|e| in_file(potential.as_ref().unwrap_or(shift), e))?;
                phi.validate(&system)?;
                let loops = system.loops().map(LoopCounts::without_override);
                Ok(Source {
                    label: shift.display().to_string(),
                    graph: Some(Graph { system, potential: phi }),
                    law,
                    loops,
                })
            }
        }
    }

    /// Restricts the closed-form data to the loops present in the graph.
    fn truncated(mut self) -> Self {
        let top = self.graph.as_ref().and_then(|g| g.system.max_loop_len());
        if let Some(l) = top {
            self.law = self.law.map(|law| ReturnLaw::Table(law.log_weights(l)));
            self.loops = self.loops.map(|a| LoopCounts::list((1..=l).map(|n| a.count_u64(n).unwrap_or(u64::MAX)).collect()));
        }
        self
    }

    pub fn graph(&self, command: &str) -> Result<&Graph, CliError> {
        self.graph
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("`{command}` needs a graph; {} is known only by its return weights", self.label)))
    }

    /// Partition sums at the state of order one, checked against the
    /// renewal identity.
    pub fn sums(&self, horizon: usize) -> Result<PartitionSums, CliError> {
        let sums = match (&self.graph, &self.law) {
            (Some(g), _) => partition_sums(&g.system, &g.potential, horizon)?,
            (None, Some(law)) => partition_sums_renewal(&law.log_weights(horizon), horizon)?,
            (None, None) => return Err(CliError::Config("source has neither a graph nor a return law".into())),
        };
        let defect = sums.renewal_defect();
        if defect.is_nan() || defect > 1e-9 {
            return Err(CliError::Breach(format!("renewal identity off by {defect}")));
        }
        if !sums.first_returns_dominated() {
            return Err(CliError::Breach("first-return sums exceed partition sums".into()));
        }
        Ok(sums)
    }
}

fn in_file(path: &std::path::Path, e: cms_core::CmsError) -> CliError {
    match CliError::from(e) {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    }
}

//! Neighbor queries, PCA and trajectory projection.

mod neighbors;
mod pca;

use std::collections::BTreeSet;
use std::io::Write;

pub use neighbors::{
    compare_neighbors, nearest_neighbors, nearest_neighbors_parallel, truncate2, NeighborList,
};
pub use pca::{pca_fit, PcaModel};

use crate::error::{Error, Result};
use crate::store::EmbeddingTable;
use crate::trajectory::TrajectoryLog;

/// One projected snapshot.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectedPoint {
    pub epoch: u32,
    pub occurrence: u32,
    pub coords: Vec<f64>,
}

/// A token's history mapped into a shared low-dimensional PCA space.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectedTrajectory {
    pub token: String,
    pub k: usize,
    /// One point per snapshot, in run order. Never empty.
    pub points: Vec<ProjectedPoint>,
    /// Projection of the pre-trained vector, when the origin has one.
    pub origin_point: Option<Vec<f64>>,
}

impl ProjectedTrajectory {
    pub fn initial_point(&self) -> &ProjectedPoint {
        &self.points[0]
    }

    pub fn final_point(&self) -> &ProjectedPoint {
        &self.points[self.points.len() - 1]
    }
}

/// Projects the histories of `tokens` onto `k` (2 or 3) principal components
/// fitted on the union of their snapshots and origin vectors.
///
/// Pass the origin as it was used during the run (normalized or not).
pub fn project_trajectories(
    log: &TrajectoryLog,
    origin: Option<&EmbeddingTable>,
    tokens: &[&str],
    k: usize,
) -> Result<Vec<ProjectedTrajectory>> {
    if !(2..=3).contains(&k) {
        return Err(Error::Config(format!(
            "projection must be 2 or 3 dimensional, got {k}"
        )));
    }
    if k > log.dim() {
        return Err(Error::Config(format!(
            "cannot project {}-dimensional vectors onto {k} components",
            log.dim()
        )));
    }
    let mut seen = BTreeSet::new();
    let tokens: Vec<&str> = tokens.iter().copied().filter(|t| seen.insert(*t)).collect();
    if tokens.is_empty() {
        return Err(Error::Undefined("no tokens requested".into()));
    }

    let histories: Vec<_> = tokens
        .iter()
        .map(|&t| {
            let h = log.token_history(t);
            if h.is_empty() {
                Err(Error::unknown(t))
            } else {
                Ok(h)
            }
        })
        .collect::<Result<_>>()?;
    let origins: Vec<Option<&[f32]>> = tokens
        .iter()
        .map(|t| origin.and_then(|o| o.lookup(t)))
        .collect();
    if let Some(v) = origins.iter().flatten().find(|v| v.len() != log.dim()) {
        return Err(Error::Dimension {
            expected: log.dim(),
            found: v.len(),
        });
    }

    let mut union: Vec<&[f32]> = histories
        .iter()
        .flat_map(|h| h.iter().map(|s| s.vector))
        .chain(origins.iter().flatten().copied())
        .collect();
    if union.len() == 1 {
        union.push(union[0]);
    }
    let model = pca_fit(&union, k)?;

    Ok(tokens
        .iter()
        .zip(histories)
        .zip(origins)
        .map(|((&token, history), origin)| ProjectedTrajectory {
            token: token.to_owned(),
            k,
            points: history
                .iter()
                .map(|s| ProjectedPoint {
                    epoch: s.epoch,
                    occurrence: s.occurrence,
                    coords: model.project(s.vector),
                })
                .collect(),
            origin_point: origin.map(|v| model.project(v)),
        })
        .collect())
}

/// Writes `token,epoch,occ,c1,c2[,c3],role` rows: the origin (epoch and occ
/// 0) when known, the first snapshot as `initial`, every snapshot as `step`,
/// and the last snapshot as `final`.
pub fn write_trajectory_csv<W: Write>(
    trajectories: &[ProjectedTrajectory],
    writer: &mut W,
) -> Result<()> {
    let k = trajectories.first().map_or(2, |t| t.k);
    let coords_header: Vec<String> = (1..=k).map(|i| format!("c{i}")).collect();
    writeln!(writer, "token,epoch,occ,{},role", coords_header.join(","))?;

    let row = |w: &mut W, token: &str, epoch: u32, occ: u32, coords: &[f64], role: &str| {
        let coords: Vec<String> = coords.iter().map(|c| c.to_string()).collect();
        writeln!(
            w,
            "{},{epoch},{occ},{},{role}",
            csv_field(token),
            coords.join(",")
        )
    };
    for t in trajectories {
        if let Some(o) = &t.origin_point {
            row(writer, &t.token, 0, 0, o, "origin")?;
        }
        let first = t.initial_point();
        row(
            writer,
            &t.token,
            first.epoch,
            first.occurrence,
            &first.coords,
            "initial",
        )?;
        for p in &t.points {
            row(writer, &t.token, p.epoch, p.occurrence, &p.coords, "step")?;
        }
        let last = t.final_point();
        row(
            writer,
            &t.token,
            last.epoch,
            last.occurrence,
            &last.coords,
            "final",
        )?;
    }
    Ok(())
}

/// Quotes a CSV field when needed.
pub fn csv_field(s: &str) -> std::borrow::Cow<'_, str> {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\"")).into()
    } else {
        s.into()
    }
}

use serde::Serialize;

use super::EpCandidate;

/// A group of candidates connected by links shorter than the radius.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cluster {
    /// Indices into the candidate list.
    pub members: Vec<usize>,
    /// Mean of the member coordinates.
    pub center: Vec<f64>,
    /// Largest distance between two members.
    pub span: f64,
    /// Fitted splitting exponents of the members, where available.
    pub exponents: Vec<Option<f64>>,
}

impl Cluster {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

/// Single-linkage clustering of candidates in search coordinates.
pub fn cluster_report(candidates: &[EpCandidate], radius: f64) -> Vec<Cluster> {
    let n = candidates.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if candidates[i].location.distance(&candidates[j].location) <= radius {
                let (ri, rj) = (root(&mut parent, i), root(&mut parent, j));
                if ri != rj {
                    parent[rj.max(ri)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = root(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
        .into_iter()
        .map(|members| {
            let coords: Vec<Vec<f64>> = members.iter().map(|&i| candidates[i].location.coords()).collect();
            let dim = coords[0].len();
            let center = (0..dim)
                .map(|d| coords.iter().map(|c| c[d]).sum::<f64>() / coords.len() as f64)
                .collect();
            let mut span: f64 = 0.0;
            for x in &members {
                for y in &members {
                    span = span.max(candidates[*x].location.distance(&candidates[*y].location));
                }
            }
            let exponents = members
                .iter()
                .map(|&i| candidates[i].order.as_ref().map(|o| o.exponent))
                .collect();
            Cluster {
                members,
                center,
                span,
                exponents,
            }
        })
        .collect()
}

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Assignment of N nodes to communities `0..c`.
///
/// Labels are canonical: communities are numbered in order of first
/// appearance, so two partitions inducing the same grouping compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    membership: Vec<usize>,
    n_communities: usize,
}

impl Partition {
    /// Relabel arbitrary community tags into canonical form.
    pub fn new(labels: &[usize]) -> Self {
        let max = labels.iter().copied().max().map_or(0, |m| m + 1);
        let mut remap = vec![usize::MAX; max];
        let mut next = 0;
        let membership = labels
            .iter()
            .map(|&l| {
                if remap[l] == usize::MAX {
                    remap[l] = next;
                    next += 1;
                }
                remap[l]
            })
            .collect();
        Partition {
            membership,
            n_communities: next,
        }
    }

    pub fn singletons(n: usize) -> Self {
        Partition {
            membership: (0..n).collect(),
            n_communities: n,
        }
    }

    pub fn all_in_one(n: usize) -> Self {
        Partition {
            membership: vec![0; n],
            n_communities: usize::from(n > 0),
        }
    }

    pub fn len(&self) -> usize {
        self.membership.len()
    }

    pub fn is_empty(&self) -> bool {
        self.membership.is_empty()
    }

    pub fn n_communities(&self) -> usize {
        self.n_communities
    }

    pub fn membership(&self) -> &[usize] {
        &self.membership
    }

    #[inline]
    pub fn community_of(&self, node: usize) -> usize {
        self.membership[node]
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_communities];
        for &c in &self.membership {
            sizes[c] += 1;
        }
        sizes
    }

    /// Node lists per community, each in ascending node order.
    pub fn communities(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_communities];
        for (i, &c) in self.membership.iter().enumerate() {
            out[c].push(i);
        }
        out
    }

    /// Write `id<TAB>community` rows, one per node, after `preamble`.
    pub fn write(&self, path: impl AsRef<Path>, ids: &[String], preamble: &str) -> Result<()> {
        let path = path.as_ref();
        if ids.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: ids.len(),
            });
        }
        let mut out = String::from(preamble);
        out.push_str("id\tcommunity\n");
        for (id, c) in ids.iter().zip(&self.membership) {
            writeln!(out, "{id}\t{c}").unwrap();
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Read a partition file, aligning rows to `ids`. Every id must appear.
    pub fn read(path: impl AsRef<Path>, ids: &[String]) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let index: std::collections::HashMap<&str, usize> =
            ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let mut labels = vec![usize::MAX; ids.len()];
        for (line_no, line) in text.lines().enumerate() {
            if line.starts_with('#') || line.trim().is_empty() || line.starts_with("id\t") {
                continue;
            }
            let (id, c) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(path, line_no + 1, "expected `id<TAB>community`"))?;
            let &i = index
                .get(id)
                .ok_or_else(|| Error::parse(path, line_no + 1, format!("unknown id {id:?}")))?;
            labels[i] = c
                .trim()
                .parse()
                .map_err(|_| Error::parse(path, line_no + 1, "bad community index"))?;
        }
        if let Some(i) = labels.iter().position(|&l| l == usize::MAX) {
            return Err(Error::parse(path, 0, format!("id {:?} has no community", ids[i])));
        }
        Ok(Partition::new(&labels))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_labels() {
        let a = Partition::new(&[7, 7, 2, 9, 2]);
        assert_eq!(a.membership(), [0, 0, 1, 2, 1]);
        assert_eq!(a.n_communities(), 3);
        assert_eq!(a, Partition::new(&[1, 1, 0, 5, 0]));
        assert_eq!(a.sizes(), [2, 2, 1]);
        assert_eq!(a.communities(), vec![vec![0, 1], vec![2, 4], vec![3]]);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.tsv");
        let ids: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let part = Partition::new(&[1, 0, 1]);
        part.write(&p, &ids, "# hdr\n").unwrap();
        assert_eq!(Partition::read(&p, &ids).unwrap(), part);
    }
}

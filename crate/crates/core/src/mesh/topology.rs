use std::collections::BTreeMap;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{local_edges, Mesh};
use crate::error::{Error, Result};

/// Boundary condition family attached to a boundary tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BcKind {
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FacetClass {
    Interior,
    Dirichlet,
    Neumann,
}

const NONE: usize = usize::MAX;

/// Facet and edge connectivity derived from a [`Mesh`].
///
/// Facets are sorted lexicographically by their sorted vertex indices. Local facet `k`
/// of an element is the one opposite its local vertex `k`. For interior facets the
/// first incident element is the one with the lower index.
#[derive(Debug, Clone)]
pub struct Topology {
    dim: usize,
    facets: Vec<usize>,
    facet_elements: Vec<[(usize, u8); 2]>,
    element_facets: Vec<usize>,
    facet_class: Vec<FacetClass>,
    facet_tag: Vec<Option<i32>>,
    edges: Vec<(usize, usize)>,
    element_edges: Vec<usize>,
}

fn facet_key(el: &[usize], skip: usize) -> [usize; 3] {
    let mut key = [NONE; 3];
    let mut n = 0;
    for (i, &v) in el.iter().enumerate() {
        if i != skip {
            key[n] = v;
            n += 1;
        }
    }
    key[..n].sort_unstable();
    key
}

fn sorted_key(f: &[usize]) -> [usize; 3] {
    let mut key = [NONE; 3];
    key[..f.len()].copy_from_slice(f);
    key[..f.len()].sort_unstable();
    key
}

impl Topology {
    pub fn build(mesh: &Mesh, bc_classes: &BTreeMap<i32, BcKind>) -> Result<Topology> {
        let dim = mesh.dim();
        let n_el = mesh.n_elements();
        let nf_local = dim + 1;

        let mut entries: Vec<([usize; 3], usize, u8)> = Vec::with_capacity(n_el * nf_local);
        for t in 0..n_el {
            let el = mesh.element(t);
            for k in 0..nf_local {
                entries.push((facet_key(el, k), t, k as u8));
            }
        }
        entries.sort_unstable();

        let mut boundary: HashMap<[usize; 3], i32> = HashMap::with_capacity(mesh.n_boundary_facets());
        for (f, tag) in mesh.boundary_facets() {
            if boundary.insert(sorted_key(f), tag).is_some() {
                return Err(Error::Topology {
                    facet: f.to_vec(),
                    reason: "boundary facet listed twice".into(),
                });
            }
        }

        let mut facets = Vec::new();
        let mut facet_elements = Vec::new();
        let mut facet_class = Vec::new();
        let mut facet_tag = Vec::new();
        let mut element_facets = vec![NONE; n_el * nf_local];
        let mut matched_boundary = 0usize;

        let mut i = 0;
        while i < entries.len() {
            let key = entries[i].0;
            let mut j = i + 1;
            while j < entries.len() && entries[j].0 == key {
                j += 1;
            }
            let verts: Vec<usize> = key[..dim].to_vec();
            let id = facet_elements.len();
            match j - i {
                1 => {
                    let Some(&tag) = boundary.get(&key) else {
                        return Err(Error::Topology {
                            facet: verts,
                            reason: "facet has one incident element but is not a tagged boundary facet (hanging node?)".into(),
                        });
                    };
                    matched_boundary += 1;
                    let class = match bc_classes.get(&tag) {
                        Some(BcKind::Dirichlet) => FacetClass::Dirichlet,
                        Some(BcKind::Neumann) => FacetClass::Neumann,
                        None => {
                            return Err(Error::Config(format!(
                                "boundary tag {tag} has no boundary condition"
                            )))
                        }
                    };
                    facet_elements.push([(entries[i].1, entries[i].2), (NONE, 0)]);
                    facet_class.push(class);
                    facet_tag.push(Some(tag));
                }
                2 => {
                    if boundary.contains_key(&key) {
                        return Err(Error::Topology {
                            facet: verts,
                            reason: "boundary facet is shared by two elements".into(),
                        });
                    }
                    facet_elements.push([(entries[i].1, entries[i].2), (entries[i + 1].1, entries[i + 1].2)]);
                    facet_class.push(FacetClass::Interior);
                    facet_tag.push(None);
                }
                n => {
                    return Err(Error::Topology {
                        facet: verts,
                        reason: format!("facet shared by {n} elements"),
                    })
                }
            }
            for e in &entries[i..j] {
                element_facets[e.1 * nf_local + e.2 as usize] = id;
            }
            facets.extend_from_slice(&key[..dim]);
            i = j;
        }
        if matched_boundary != boundary.len() {
            let missing = mesh
                .boundary_facets()
                .find(|(f, _)| {
                    let k = sorted_key(f);
                    entries.binary_search_by(|e| e.0.cmp(&k)).is_err()
                })
                .map(|(f, _)| f.to_vec())
                .unwrap_or_default();
            return Err(Error::Topology {
                facet: missing,
                reason: "boundary facet is not a facet of any element".into(),
            });
        }

        let le = local_edges(dim);
        let mut edge_entries: Vec<((usize, usize), usize, u8)> = Vec::with_capacity(n_el * le.len());
        for t in 0..n_el {
            let el = mesh.element(t);
            for (k, &(a, b)) in le.iter().enumerate() {
                edge_entries.push((super::sorted_pair((el[a], el[b])), t, k as u8));
            }
        }
        edge_entries.sort_unstable();
        let mut edges: Vec<(usize, usize)> = Vec::new();
        let mut element_edges = vec![NONE; n_el * le.len()];
        for (e, t, k) in edge_entries {
            if edges.last() != Some(&e) {
                edges.push(e);
            }
            element_edges[t * le.len() + k as usize] = edges.len() - 1;
        }

        Ok(Topology {
            dim,
            facets,
            facet_elements,
            element_facets,
            facet_class,
            facet_tag,
            edges,
            element_edges,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_facets(&self) -> usize {
        self.facet_class.len()
    }

    pub fn facet(&self, f: usize) -> &[usize] {
        &self.facets[f * self.dim..(f + 1) * self.dim]
    }

    /// Incident `(element, local facet index)` pairs; one for boundary facets, two otherwise.
    pub fn facet_elements(&self, f: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.facet_elements[f]
            .iter()
            .filter(|(t, _)| *t != NONE)
            .map(|&(t, k)| (t, k as usize))
    }

    pub fn facet_class(&self, f: usize) -> FacetClass {
        self.facet_class[f]
    }

    pub fn facet_tag(&self, f: usize) -> Option<i32> {
        self.facet_tag[f]
    }

    /// Global facet ids of element `t`, indexed by local facet (opposite local vertex).
    pub fn element_facets(&self, t: usize) -> &[usize] {
        let n = self.dim + 1;
        &self.element_facets[t * n..(t + 1) * n]
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Global edge ids of element `t` in local edge order.
    pub fn element_edges(&self, t: usize) -> &[usize] {
        let n = local_edges(self.dim).len();
        &self.element_edges[t * n..(t + 1) * n]
    }

    pub fn count(&self, class: FacetClass) -> usize {
        self.facet_class.iter().filter(|&&c| c == class).count()
    }
}

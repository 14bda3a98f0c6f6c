use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};

#[derive(Serialize, Deserialize)]
struct MeshDoc {
    dim: usize,
    vertices: Vec<Vec<f64>>,
    elements: Vec<ElementDoc>,
    #[serde(default)]
    boundary: Vec<FacetDoc>,
}

#[derive(Serialize, Deserialize)]
struct ElementDoc {
    v: Option<Vec<usize>>,
    region: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    refinement_edge: Option<u8>,
}

#[derive(Serialize, Deserialize)]
struct FacetDoc {
    v: Option<Vec<usize>>,
    tag: Option<i32>,
}

fn to_doc(mesh: &Mesh) -> MeshDoc {
    let d = mesh.dim();
    MeshDoc {
        dim: d,
        vertices: mesh.vertices().iter().map(|p| p[..d].to_vec()).collect(),
        elements: (0..mesh.n_elements())
            .map(|t| ElementDoc {
                v: Some(mesh.element(t).to_vec()),
                region: Some(mesh.region(t)),
                refinement_edge: Some(mesh.refinement_edge(t) as u8),
            })
            .collect(),
        boundary: mesh
            .boundary_facets()
            .map(|(f, tag)| FacetDoc {
                v: Some(f.to_vec()),
                tag: Some(tag),
            })
            .collect(),
    }
}

fn from_doc(doc: MeshDoc) -> std::result::Result<Mesh, String> {
    let d = doc.dim;
    let mut vertices = Vec::with_capacity(doc.vertices.len());
    for (i, v) in doc.vertices.iter().enumerate() {
        if v.len() != d {
            return Err(format!("vertex {i} has {} coordinates, expected {d}", v.len()));
        }
        let mut p: Point = [0.0; 3];
        p[..d].copy_from_slice(v);
        vertices.push(p);
    }
    let mut elements = Vec::with_capacity(doc.elements.len());
    let mut regions = Vec::with_capacity(doc.elements.len());
    let mut edges = Vec::with_capacity(doc.elements.len());
    for (t, e) in doc.elements.into_iter().enumerate() {
        elements.push(e.v.ok_or_else(|| format!("element {t}: missing key 'v'"))?);
        regions.push(e.region.ok_or_else(|| format!("element {t}: missing key 'region'"))?);
        edges.push(e.refinement_edge);
    }
    let mut boundary = Vec::with_capacity(doc.boundary.len());
    for (k, f) in doc.boundary.into_iter().enumerate() {
        let v = f.v.ok_or_else(|| format!("boundary facet {k}: missing key 'v'"))?;
        let tag = f.tag.ok_or_else(|| format!("boundary facet {k}: missing key 'tag'"))?;
        boundary.push((v, tag));
    }
    // refinement edges are used only when every element carries one
    let edges: Option<Vec<u8>> = edges.into_iter().collect();
    Mesh::with_refinement_edges(d, vertices, elements, regions, boundary, edges).map_err(|e| e.to_string())
}

/// Serializes a mesh to the JSON mesh format.
pub fn mesh_to_string(mesh: &Mesh) -> String {
    serde_json::to_string(&to_doc(mesh)).expect("mesh documents always serialize")
}

/// Parses the JSON mesh format; `origin` names the source in error messages.
pub fn mesh_from_str(text: &str, origin: &Path) -> Result<Mesh> {
    let parse_err = |message: String| Error::Parse {
        path: origin.to_path_buf(),
        message,
    };
    let doc: MeshDoc = serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    from_doc(doc).map_err(parse_err)
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    mesh_from_str(&text, path)
}

pub fn write_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, mesh_to_string(mesh)).map_err(|e| Error::io(path, e))
}

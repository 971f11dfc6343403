//! Python bindings for the VS-SDD engine.

use std::sync::Arc;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use vssdd::export;
use vssdd::frontend;
use vssdd::queries::{self, CountContext};
use vssdd::{Mode, Op, SddManager, VsManager, VsSdd};

fn err(e: vssdd::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_op(op: &str) -> PyResult<Op> {
    match op {
        "and" => Ok(Op::And),
        "or" => Ok(Op::Or),
        "xor" => Ok(Op::Xor),
        other => Err(PyValueError::new_err(format!(
            "unknown operator `{other}` (expected and, or, xor)"
        ))),
    }
}

#[pyclass(name = "Vtree", frozen)]
struct PyVtree {
    inner: Arc<vssdd::Vtree>,
}

#[pymethods]
impl PyVtree {
    /// Balanced vtree over variables 1..=num_vars.
    #[staticmethod]
    fn balanced(num_vars: u32) -> PyResult<PyVtree> {
        let vars: Vec<u32> = (1..=num_vars).collect();
        Ok(PyVtree {
            inner: Arc::new(vssdd::Vtree::build_balanced(&vars).map_err(err)?),
        })
    }

    /// Right-linear vtree over variables 1..=num_vars.
    #[staticmethod]
    fn right_linear(num_vars: u32) -> PyResult<PyVtree> {
        let vars: Vec<u32> = (1..=num_vars).collect();
        Ok(PyVtree {
            inner: Arc::new(vssdd::Vtree::build_right_linear(&vars).map_err(err)?),
        })
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<PyVtree> {
        Ok(PyVtree {
            inner: Arc::new(vssdd::Vtree::parse(text).map_err(err)?),
        })
    }

    #[getter]
    fn num_vars(&self) -> u32 {
        self.inner.num_vars()
    }

    fn serialize(&self) -> String {
        self.inner.serialize()
    }

    fn __repr__(&self) -> String {
        format!("Vtree({} vars)", self.inner.num_vars())
    }
}

/// Handle to a compiled function: structure id plus vtree offset.
#[pyclass(name = "Node", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyNode {
    inner: VsSdd,
}

#[pymethods]
impl PyNode {
    #[getter]
    fn structure(&self) -> u32 {
        self.inner.structure
    }

    #[getter]
    fn offset(&self) -> u32 {
        self.inner.offset
    }

    fn __richcmp__(&self, other: &PyNode, op: pyo3::basic::CompareOp) -> PyResult<bool> {
        match op {
            pyo3::basic::CompareOp::Eq => Ok(self.inner == other.inner),
            pyo3::basic::CompareOp::Ne => Ok(self.inner != other.inner),
            _ => Err(PyValueError::new_err("nodes are only comparable for equality")),
        }
    }

    fn __hash__(&self) -> u64 {
        (self.inner.structure as u64) << 32 | self.inner.offset as u64
    }

    fn __repr__(&self) -> String {
        format!("Node(structure={}, offset={})", self.inner.structure, self.inner.offset)
    }
}

#[pyclass(name = "Manager")]
struct PyManager {
    mgr: VsManager,
}

#[pymethods]
impl PyManager {
    #[new]
    #[pyo3(signature = (vtree, mode = "trimmed", compress = true))]
    fn new(vtree: &PyVtree, mode: &str, compress: bool) -> PyResult<PyManager> {
        let mode = match mode {
            "trimmed" => Mode::Trimmed,
            "normalized" => Mode::Normalized,
            other => {
                return Err(PyValueError::new_err(format!(
                    "unknown mode `{other}` (expected trimmed or normalized)"
                )))
            }
        };
        Ok(PyManager {
            mgr: VsManager::new(vtree.inner.clone(), mode, compress),
        })
    }

    fn constant(&self, value: bool) -> PyNode {
        PyNode {
            inner: self.mgr.constant(value),
        }
    }

    #[pyo3(signature = (var, polarity = true))]
    fn literal(&self, var: u32, polarity: bool) -> PyResult<PyNode> {
        Ok(PyNode {
            inner: self.mgr.literal(var, polarity).map_err(err)?,
        })
    }

    fn apply(&mut self, a: &PyNode, b: &PyNode, op: &str) -> PyResult<PyNode> {
        Ok(PyNode {
            inner: self.mgr.apply(a.inner, b.inner, parse_op(op)?).map_err(err)?,
        })
    }

    fn negate(&mut self, f: &PyNode) -> PyResult<PyNode> {
        Ok(PyNode {
            inner: self.mgr.negate(f.inner).map_err(err)?,
        })
    }

    /// Condition on a term of signed literals, e.g. [2, -3].
    fn condition(&mut self, f: &PyNode, term: Vec<i64>) -> PyResult<PyNode> {
        Ok(PyNode {
            inner: self.mgr.condition(f.inner, &term).map_err(err)?,
        })
    }

    /// Compile DIMACS CNF text.
    fn compile_cnf(&mut self, text: &str) -> PyResult<PyNode> {
        let cnf = frontend::parse_dimacs(text).map_err(err)?;
        let (f, _) = frontend::compile_cnf_vs(&cnf, &mut self.mgr).map_err(err)?;
        Ok(PyNode { inner: f })
    }

    fn size(&self, f: &PyNode) -> u64 {
        self.mgr.size(f.inner)
    }

    fn node_count(&self, f: &PyNode) -> u64 {
        self.mgr.node_count(f.inner)
    }

    /// Model count over all vtree variables, as a Python int.
    fn model_count(&self, py: Python<'_>, f: &PyNode) -> PyResult<Py<PyAny>> {
        let mut ctx = CountContext::new();
        let count = ctx.count_all(&self.mgr, f.inner).map_err(err)?;
        let s = count.to_string();
        let int_type = py.get_type::<pyo3::types::PyInt>();
        Ok(int_type.call1((s,))?.unbind())
    }

    fn satisfiable(&mut self, f: &PyNode) -> bool {
        queries::satisfiable(&mut self.mgr, f.inner)
    }

    fn valid(&mut self, f: &PyNode) -> PyResult<bool> {
        queries::valid(&mut self.mgr, f.inner).map_err(err)
    }

    fn entails(&mut self, f: &PyNode, g: &PyNode) -> PyResult<bool> {
        queries::entails(&mut self.mgr, f.inner, g.inner).map_err(err)
    }

    fn equivalent(&mut self, f: &PyNode, g: &PyNode) -> PyResult<bool> {
        queries::equivalent(&mut self.mgr, f.inner, g.inner).map_err(err)
    }

    fn forget(&mut self, f: &PyNode, var: u32) -> PyResult<PyNode> {
        Ok(PyNode {
            inner: queries::forget_singleton(&mut self.mgr, f.inner, var).map_err(err)?,
        })
    }

    /// Models as lists of booleans over all vtree variables.
    #[pyo3(signature = (f, limit = 0))]
    fn enumerate_models(&self, f: &PyNode, limit: usize) -> PyResult<Vec<Vec<bool>>> {
        queries::enumerate_models(&self.mgr, f.inner, limit).map_err(err)
    }

    /// Size of the equivalent baseline SDD on the same vtree.
    fn sdd_size(&self, f: &PyNode) -> PyResult<u64> {
        let mut sm = SddManager::new(self.mgr.vtree().clone());
        let s = self.mgr.to_baseline_sdd(f.inner, &mut sm).map_err(err)?;
        Ok(sm.size(s))
    }

    fn serialize(&self, f: &PyNode) -> String {
        export::serialize_diagram(&self.mgr, f.inner)
    }

    fn load(&mut self, text: &str) -> PyResult<PyNode> {
        Ok(PyNode {
            inner: export::parse_diagram_into(text, &mut self.mgr).map_err(err)?,
        })
    }

    fn export_dot(&self, f: &PyNode) -> String {
        export::export_dot(&self.mgr, f.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "Manager({} vars, {:?})",
            self.mgr.vtree().num_vars(),
            self.mgr.mode()
        )
    }
}

#[pymodule]
fn vssdd_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyVtree>()?;
    m.add_class::<PyNode>()?;
    m.add_class::<PyManager>()?;
    Ok(())
}

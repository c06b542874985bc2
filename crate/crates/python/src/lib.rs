//! Python bindings. Queries and results cross the boundary as JSON strings,
//! in the same formats the CLI reads and writes.

use std::collections::BTreeMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use regimecalc::identify::{compare_with_oracle, oracle as run_oracle};
use regimecalc::io::{
    comparison_to_json, model_from_json, model_to_json, oracle_to_json, query_from_json, result_to_json,
};
use regimecalc::model::sample as draw;
use regimecalc::{CausalQuery, Error, ObservedDistribution};

fn py_err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_query(m: &regimecalc::Model, q: &str) -> Result<CausalQuery, Error> {
    query_from_json(q, m.variables())
}

fn identify_json(m: &regimecalc::Model, q: &str) -> Result<String, Error> {
    let q = parse_query(m, q)?;
    let r = regimecalc::identify(&ObservedDistribution::from_model(m), &q)?;
    Ok(result_to_json(&r).to_string())
}

fn oracle_json(m: &regimecalc::Model, q: &str) -> Result<String, Error> {
    let q = parse_query(m, q)?;
    Ok(oracle_to_json(&run_oracle(m, &q, None)?).to_string())
}

fn compare_json(m: &regimecalc::Model, q: &str) -> Result<String, Error> {
    let q = parse_query(m, q)?;
    Ok(comparison_to_json(&compare_with_oracle(m, &q)?).to_string())
}

#[pyclass(name = "Model", frozen)]
struct PyModel {
    inner: regimecalc::Model,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        Ok(Self {
            inner: model_from_json(s).map_err(py_err)?,
        })
    }

    fn to_json(&self) -> String {
        model_to_json(&self.inner)
    }

    fn variables(&self) -> Vec<String> {
        self.inner.variables().iter().map(|v| v.name.clone()).collect()
    }

    fn topological_order(&self) -> Vec<String> {
        self.inner.dag().topological_order()
    }

    fn joint_prob(&self, assignment: BTreeMap<String, usize>) -> PyResult<f64> {
        self.inner.joint_prob(&assignment).map_err(py_err)
    }

    /// Flat marginal table over `vars`, last variable varying fastest.
    fn marginal(&self, vars: Vec<String>) -> PyResult<Vec<f64>> {
        Ok(self.inner.marginal(&vars).map_err(py_err)?.values().to_vec())
    }

    #[pyo3(signature = (a, b, given = Vec::new()))]
    fn d_separated(&self, a: Vec<String>, b: Vec<String>, given: Vec<String>) -> PyResult<bool> {
        self.inner.dag().d_separated(&a, &b, &given).map_err(py_err)
    }

    /// Rows of value codes, one column per variable in declaration order.
    #[pyo3(signature = (n, seed = 0))]
    fn sample(&self, n: usize, seed: u64) -> PyResult<Vec<Vec<usize>>> {
        let data = draw(&self.inner, n, seed).map_err(py_err)?;
        Ok(data.rows().map(<[usize]>::to_vec).collect())
    }
}

/// Identification result for a query, as JSON.
#[pyfunction]
fn identify(model: &PyModel, query: &str) -> PyResult<String> {
    identify_json(&model.inner, query).map_err(py_err)
}

/// Ground-truth answer from the full model, as JSON.
#[pyfunction]
fn oracle(model: &PyModel, query: &str) -> PyResult<String> {
    oracle_json(&model.inner, query).map_err(py_err)
}

#[pyfunction]
fn compare(model: &PyModel, query: &str) -> PyResult<String> {
    compare_json(&model.inner, query).map_err(py_err)
}

#[pymodule]
#[pyo3(name = "regimecalc")]
fn regimecalc_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(identify, m)?)?;
    m.add_function(wrap_pyfunction!(oracle, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use regimecalc::fixtures;

    const CDE: &str = r#"{"kind":"cde","treatment":"X","response":"Y","mediator":"Z","z":1}"#;

    #[test]
    fn json_helpers_agree_with_the_oracle() {
        let m = fixtures::g_seq(2);
        let id: serde_json::Value = serde_json::from_str(&identify_json(&m, CDE).unwrap()).unwrap();
        let or: serde_json::Value = serde_json::from_str(&oracle_json(&m, CDE).unwrap()).unwrap();
        let gap = (id["value"].as_f64().unwrap() - or["value"].as_f64().unwrap()).abs();
        assert!(gap < 1e-12);
        let c: serde_json::Value = serde_json::from_str(&compare_json(&m, CDE).unwrap()).unwrap();
        assert_eq!(c["skipped"], false);
    }

    #[test]
    fn bad_query_is_an_error() {
        assert!(identify_json(&fixtures::g_seq(2), "{").is_err());
    }
}

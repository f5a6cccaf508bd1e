//! Python module `pysymfact`: factor pairs as opaque objects with apply,
//! materialize and JSON round trips.

use pyo3::exceptions::{PyMemoryError, PyOSError, PyValueError};
use pyo3::prelude::*;

use symfact::displacement::{self, DisplacementInput, DisplacementOptions};
use symfact::sos::Polynomial;
use symfact::{DenseMatrix, Error, FactorPair, HankelGen, ToeplitzGen, C64};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(m) => PyOSError::new_err(m),
        Error::SizeCap { .. } => PyMemoryError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// B·B* − C·C* with implicit factors.
#[pyclass(module = "pysymfact", frozen)]
struct Factor {
    pair: FactorPair,
    report: Option<String>,
}

#[pymethods]
impl Factor {
    /// Order of the factored matrix.
    #[getter]
    fn order(&self) -> usize {
        self.pair.order()
    }

    #[getter]
    fn b_cols(&self) -> usize {
        self.pair.b.ncols()
    }

    #[getter]
    fn c_cols(&self) -> usize {
        self.pair.c.ncols()
    }

    #[getter]
    fn provenance(&self) -> String {
        self.pair.provenance.clone()
    }

    /// Displacement report as JSON, when the factor came from the displacement path.
    #[getter]
    fn report(&self) -> Option<String> {
        self.report.clone()
    }

    /// (B·B* − C·C*)·x without forming the matrix.
    fn apply(&self, x: Vec<C64>) -> PyResult<Vec<C64>> {
        self.pair.apply_gram(&x).map_err(to_py)
    }

    /// Dense B·B* − C·C* as a list of rows.
    #[pyo3(signature = (cap = 4096))]
    fn materialize(&self, cap: usize) -> PyResult<Vec<Vec<C64>>> {
        let m = self.pair.materialize_target_with_cap(cap).map_err(to_py)?;
        Ok(rows_of(&m))
    }

    fn to_json(&self) -> PyResult<String> {
        self.pair.to_json().map_err(to_py)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Factor> {
        Ok(Factor {
            pair: FactorPair::from_json(text).map_err(to_py)?,
            report: None,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Factor(order={}, b_cols={}, c_cols={}, provenance={:?})",
            self.pair.order(),
            self.pair.b.ncols(),
            self.pair.c.ncols(),
            self.pair.provenance
        )
    }
}

fn rows_of(m: &DenseMatrix) -> Vec<Vec<C64>> {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| m[(i, j)]).collect()).collect()
}

fn plain(pair: FactorPair) -> Factor {
    Factor { pair, report: None }
}

/// Factor the Hankel matrix with entries gen[i + j].
#[pyfunction]
fn hankel_factor(gen: Vec<C64>) -> PyResult<Factor> {
    let h = HankelGen::new(gen).map_err(to_py)?;
    symfact::hankel::hankel_factor(&h).map(plain).map_err(to_py)
}

/// Factor the Hermitian Toeplitz matrix with first row `row`.
#[pyfunction]
fn toeplitz_factor(row: Vec<C64>) -> PyResult<Factor> {
    let t = ToeplitzGen::new(row).map_err(to_py)?;
    symfact::toeplitz::hermitian_toeplitz_factor(&t).map(plain).map_err(to_py)
}

/// Factor a real symmetric matrix of low displacement rank, given as rows.
#[pyfunction]
#[pyo3(signature = (rows, rank = 2, kappa = None, seed = None))]
fn displacement_factor(rows: Vec<Vec<C64>>, rank: usize, kappa: Option<f64>, seed: Option<u64>) -> PyResult<Factor> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    let matrix = DenseMatrix::new(n, n, rows.into_iter().flatten().collect()).map_err(to_py)?;
    let opts = DisplacementOptions {
        perturb_seed: seed,
        ..Default::default()
    };
    let out = displacement::displacement_factor(
        &DisplacementInput {
            matrix,
            rank,
            kappa_bound: kappa,
        },
        &opts,
    )
    .map_err(to_py)?;
    Ok(Factor {
        pair: out.pair,
        report: serde_json::to_string(&out.report).ok(),
    })
}

/// Factor the inverse of the Hankel matrix with entries gen[i + j].
#[pyfunction]
#[pyo3(signature = (gen, seed = None))]
fn hankel_inverse_factor(gen: Vec<C64>, seed: Option<u64>) -> PyResult<Factor> {
    let h = HankelGen::new(gen).map_err(to_py)?;
    let opts = DisplacementOptions {
        perturb_seed: seed,
        ..Default::default()
    };
    let out = displacement::hankel_inverse_factor(&h, &opts).map_err(to_py)?;
    Ok(Factor {
        pair: out.pair,
        report: serde_json::to_string(&out.report).ok(),
    })
}

/// Signed squares certificate for an even-degree polynomial, as JSON.
#[pyfunction]
fn sos_certificate(coeffs: Vec<f64>) -> PyResult<String> {
    let p = Polynomial::new(coeffs).map_err(to_py)?;
    symfact::sos::certificate(&p).and_then(|c| c.to_json()).map_err(to_py)
}

#[pymodule]
fn pysymfact(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Factor>()?;
    m.add_function(wrap_pyfunction!(hankel_factor, m)?)?;
    m.add_function(wrap_pyfunction!(toeplitz_factor, m)?)?;
    m.add_function(wrap_pyfunction!(displacement_factor, m)?)?;
    m.add_function(wrap_pyfunction!(hankel_inverse_factor, m)?)?;
    m.add_function(wrap_pyfunction!(sos_certificate, m)?)?;
    Ok(())
}

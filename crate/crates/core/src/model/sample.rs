use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Dag;

use super::{check_skeleton, flat_index, Cpt, Model, Variable};

/// Rows of full assignments. Latent columns are kept but flagged.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<String>,
    latent: Vec<bool>,
    data: Vec<usize>,
}

impl Dataset {
    pub fn new(columns: Vec<String>, latent: Vec<bool>, rows: Vec<Vec<usize>>) -> Result<Self> {
        if columns.len() != latent.len() {
            return Err(Error::DimensionMismatch("column flags".into()));
        }
        let mut data = Vec::with_capacity(rows.len() * columns.len());
        for r in rows {
            if r.len() != columns.len() {
                return Err(Error::DimensionMismatch(format!(
                    "row of length {} for {} columns",
                    r.len(),
                    columns.len()
                )));
            }
            data.extend(r);
        }
        Ok(Self { columns, latent, data })
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn is_latent(&self, col: usize) -> bool {
        self.latent[col]
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn len(&self) -> usize {
        if self.columns.is_empty() {
            0
        } else {
            self.data.len() / self.columns.len()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn rows(&self) -> impl Iterator<Item = &[usize]> {
        self.data.chunks(self.columns.len().max(1))
    }

    /// Writes a CSV with a header of node names. Latent columns are written
    /// only when `include_latent` is set.
    pub fn write_csv<W: Write>(&self, w: W, include_latent: bool) -> Result<()> {
        let keep: Vec<usize> = (0..self.columns.len())
            .filter(|&i| include_latent || !self.latent[i])
            .collect();
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(keep.iter().map(|&i| self.columns[i].as_str()))?;
        for row in self.rows() {
            wr.write_record(keep.iter().map(|&i| row[i].to_string()))?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads a CSV of integer codes; every column is marked observed.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let columns: Vec<String> = rd.headers()?.iter().map(|h| h.trim().to_string()).collect();
        let mut data = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            if rec.len() != columns.len() {
                return Err(Error::Format("ragged CSV row".into()));
            }
            for field in rec.iter() {
                data.push(
                    field
                        .trim()
                        .parse::<usize>()
                        .map_err(|_| Error::Format(format!("`{field}` is not a value code")))?,
                );
            }
        }
        let latent = vec![false; columns.len()];
        Ok(Self { columns, latent, data })
    }
}

/// Ancestral sampling in topological order; deterministic given `seed`.
pub fn sample(m: &Model, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Format("sample size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order = m.dag().topological_order();
    let vars = m.variables();
    let pos = |name: &str| vars.iter().position(|v| v.name == name).unwrap();
    let plan: Vec<(usize, &Cpt, Vec<usize>)> = order
        .iter()
        .map(|name| {
            let c = m.cpt(name).unwrap();
            (pos(name), c, c.parents().iter().map(|p| pos(p)).collect())
        })
        .collect();

    let width = vars.len();
    let mut data = vec![0usize; n * width];
    let mut pv = Vec::new();
    for row in data.chunks_mut(width) {
        for (i, c, ppos) in &plan {
            pv.clear();
            pv.extend(ppos.iter().map(|&j| row[j]));
            let probs = c.row(&pv);
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut val = probs.len() - 1;
            for (k, p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    val = k;
                    break;
                }
            }
            // Never land on a zero-probability code through rounding at the tail.
            while probs[val] == 0.0 && val > 0 {
                val -= 1;
            }
            row[*i] = val;
        }
    }
    Ok(Dataset {
        columns: vars.iter().map(|v| v.name.clone()).collect(),
        latent: vars.iter().map(|v| v.latent).collect(),
        data,
    })
}

#[derive(Debug, Clone)]
pub struct FittedModel {
    pub model: Model,
    pub warnings: Vec<String>,
}

/// Maximum-likelihood CPTs with additive smoothing. Parent configurations with
/// no mass at all get a uniform row and a warning.
pub fn fit_cpts(data: &Dataset, dag: &Dag, vars: &[Variable], smoothing: f64) -> Result<FittedModel> {
    if !smoothing.is_finite() || smoothing < 0.0 {
        return Err(Error::Format(format!("smoothing must be >= 0, got {smoothing}")));
    }
    check_skeleton(dag, vars)?;
    if let Some(v) = vars.iter().find(|v| v.latent) {
        return Err(Error::LatentNode(v.name.clone()));
    }
    let col = |name: &str| {
        data.column(name)
            .ok_or_else(|| Error::Format(format!("dataset lacks column `{name}`")))
    };
    let card = |name: &str| vars.iter().find(|v| v.name == name).map(|v| v.card).unwrap();

    let mut cpts = Vec::with_capacity(vars.len());
    let mut warnings = Vec::new();
    for v in vars {
        let parents: Vec<String> = dag.parents(&v.name)?.into_iter().collect();
        let pcards: Vec<usize> = parents.iter().map(|p| card(p)).collect();
        let tcol = col(&v.name)?;
        let pcols: Vec<usize> = parents.iter().map(|p| col(p)).collect::<Result<_>>()?;
        let n_rows: usize = pcards.iter().product();
        let mut counts = vec![smoothing; n_rows * v.card];
        let mut pv = vec![0; pcols.len()];
        for row in data.rows() {
            for (k, &c) in pcols.iter().enumerate() {
                pv[k] = row[c];
                if pv[k] >= pcards[k] {
                    return Err(Error::InvalidAssignment(format!(
                        "{}={} out of range",
                        parents[k], pv[k]
                    )));
                }
            }
            if row[tcol] >= v.card {
                return Err(Error::InvalidAssignment(format!(
                    "{}={} out of range",
                    v.name, row[tcol]
                )));
            }
            counts[flat_index(&pcards, &pv) * v.card + row[tcol]] += 1.0;
        }
        let rows = counts
            .chunks(v.card)
            .enumerate()
            .map(|(r, c)| {
                let s: f64 = c.iter().sum();
                if s > 0.0 {
                    c.iter().map(|x| x / s).collect()
                } else {
                    warnings.push(format!(
                        "{}: no data for parent configuration {r}; using uniform row",
                        v.name
                    ));
                    vec![1.0 / v.card as f64; v.card]
                }
            })
            .collect();
        cpts.push(Cpt::new(&v.name, v.card, parents, pcards, rows)?);
    }
    Ok(FittedModel {
        model: Model::new(dag.clone(), vars.to_vec(), cpts)?,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det() -> Model {
        let dag = Dag::from_edges(&["X", "Y"], &[("X", "Y")]).unwrap();
        let cx = Cpt::root("X", vec![0.0, 1.0]).unwrap();
        let cy = Cpt::new("Y", 2, vec!["X".into()], vec![2], vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        Model::new(dag, vec![Variable::binary("X"), Variable::binary("Y")], vec![cx, cy]).unwrap()
    }

    #[test]
    fn deterministic_cpts_give_constant_rows() {
        let d = sample(&det(), 50, 3).unwrap();
        assert!(d.rows().all(|r| r == [1, 0]));
        assert!(sample(&det(), 0, 3).is_err());
    }

    #[test]
    fn same_seed_same_data() {
        let dag = Dag::from_edges(&["X"], &[]).unwrap();
        let m = Model::new(
            dag,
            vec![Variable::binary("X")],
            vec![Cpt::root("X", vec![0.7, 0.3]).unwrap()],
        )
        .unwrap();
        assert_eq!(sample(&m, 100, 9).unwrap(), sample(&m, 100, 9).unwrap());
        assert_ne!(sample(&m, 100, 9).unwrap(), sample(&m, 100, 10).unwrap());
    }

    #[test]
    fn bernoulli_mean() {
        // sd of the mean is sqrt(0.21 / 1e5) ~ 0.00145; 0.01 is ~7 sd.
        let dag = Dag::from_edges(&["X"], &[]).unwrap();
        let m = Model::new(
            dag,
            vec![Variable::binary("X")],
            vec![Cpt::root("X", vec![0.7, 0.3]).unwrap()],
        )
        .unwrap();
        let d = sample(&m, 100_000, 1).unwrap();
        let mean = d.rows().map(|r| r[0] as f64).sum::<f64>() / d.len() as f64;
        assert!((mean - 0.3).abs() < 0.01, "{mean}");
    }

    #[test]
    fn fitting_recovers_deltas_and_smooths() {
        let m = det();
        let d = sample(&m, 20, 0).unwrap();
        let fit = fit_cpts(&d, m.dag(), m.variables(), 0.0).unwrap();
        assert_eq!(fit.model.cpt("X").unwrap().row(&[]), &[0.0, 1.0]);
        assert_eq!(fit.model.cpt("Y").unwrap().row(&[1]), &[1.0, 0.0]);
        // X=0 never observed: uniform row plus warning.
        assert_eq!(fit.model.cpt("Y").unwrap().row(&[0]), &[0.5, 0.5]);
        assert_eq!(fit.warnings.len(), 1);

        let empty = Dataset::new(vec!["X".into(), "Y".into()], vec![false, false], vec![]).unwrap();
        let fit = fit_cpts(&empty, m.dag(), m.variables(), 1.0).unwrap();
        assert!(fit.model.cpts().all(|c| c.rows().all(|r| r == [0.5, 0.5])));
        assert!(fit.warnings.is_empty());
    }

    #[test]
    fn csv_round_trip() {
        let d = sample(&det(), 5, 0).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf, true).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("X,Y\n1,0\n"));
        assert_eq!(Dataset::read_csv(&buf[..]).unwrap(), d);
    }

    #[test]
    fn latent_nodes_cannot_be_fit() {
        let mut dag = Dag::new();
        dag.add_chance("U", true).unwrap();
        let vars = vec![Variable::new("U", 2, true).unwrap()];
        let d = Dataset::new(vec!["U".into()], vec![true], vec![vec![0]]).unwrap();
        assert!(matches!(fit_cpts(&d, &dag, &vars, 0.0), Err(Error::LatentNode(_))));
    }
}

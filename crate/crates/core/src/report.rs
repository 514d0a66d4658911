//! One structured-text format for every diagnostic report.
//!
//! A document is a `# kind` line, `key value` fields, and named tab-separated
//! tables with one header row. Floats are rendered in scientific notation
//! with the shortest digit string that round-trips, so identical runs emit
//! byte-identical documents.

use std::fmt::Write as _;

use crate::coeffs::{Assumption1Report, GrowthBoundReport};
use crate::modulus::{OsgoodEvidence, OsgoodVerdict};
use crate::picard::{ConvergenceReport, MomentBoundReport, UniquenessReport, Verdict};
use crate::stability::{BihariBound, StabilityCertificate, StabilityReport};

/// Lossless float rendering for report rows.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}

#[derive(Debug, Default, Clone)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "[{}]", self.name);
        let _ = writeln!(out, "{}", self.columns.join("\t"));
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.join("\t"));
        }
        out
    }
}

#[derive(Debug, Default, Clone)]
pub struct ReportDoc {
    pub kind: String,
    pub fields: Vec<(String, String)>,
    pub tables: Vec<Table>,
}

impl ReportDoc {
    pub fn new(kind: &str) -> Self {
        Self {
            kind: kind.into(),
            ..Default::default()
        }
    }

    pub fn field(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        self.fields.push((key.into(), value.to_string()));
        self
    }

    pub fn push_table(&mut self, table: Table) -> &mut Self {
        self.tables.push(table);
        self
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {}", self.kind);
        for (k, v) in &self.fields {
            let _ = writeln!(out, "{k} {v}");
        }
        for t in &self.tables {
            let _ = writeln!(out);
            out.push_str(&t.render());
        }
        out
    }
}

fn verdict_str(v: &Verdict) -> String {
    match v {
        Verdict::Converged => "converged".into(),
        Verdict::MaxIterations => "max-iterations".into(),
        Verdict::Diverged {
            iterate,
            path,
            node,
        } => format!("diverged(iterate={iterate},path={path},node={node})"),
    }
}

pub fn convergence_report_doc(r: &ConvergenceReport) -> ReportDoc {
    let mut doc = ReportDoc::new("convergence-report");
    doc.field("verdict", verdict_str(&r.verdict))
        .field("paths", r.paths)
        .field("tol", fmt_f64(r.tol))
        .field("iterations_run", r.iterations_run)
        .field("e_xi_sq", fmt_f64(r.e_xi_sq))
        .field("c2", fmt_f64(r.c2));
    if let Some(k1) = r.k1 {
        doc.field("k1", fmt_f64(k1));
    }
    if let Some(c1) = r.c1 {
        doc.field("c1", fmt_f64(c1));
    }
    if let Some(c3) = r.c3 {
        doc.field("c3", fmt_f64(c3));
    }
    let mut t = Table::new("successive_distances", &["k", "d", "se", "verdict"]);
    for d in &r.successive {
        t.row(vec![
            d.from.to_string(),
            fmt_f64(d.distance),
            fmt_f64(d.se),
            verdict_str(&r.verdict),
        ]);
    }
    doc.push_table(t);
    if let Some(pairs) = &r.pairwise {
        let mut t = Table::new("pairwise_distances", &["n", "i", "d", "se"]);
        for d in pairs {
            t.row(vec![
                d.from.to_string(),
                d.to.to_string(),
                fmt_f64(d.distance),
                fmt_f64(d.se),
            ]);
        }
        doc.push_table(t);
    }
    doc
}

pub fn assumption1_report_doc(r: &Assumption1Report) -> ReportDoc {
    let mut doc = ReportDoc::new("assumption1-report");
    doc.field("pass", r.pass)
        .field("tol", fmt_f64(r.tol))
        .field("pairs_checked", r.pairs_checked)
        .field("max_discrepancy", fmt_f64(r.max_discrepancy))
        .field("worst_ratio", fmt_f64(r.worst_ratio));
    let mut t = Table::new("worst_pairs", &["kind", "t", "y1", "y2"]);
    let fmt_vec = |v: &[f64]| v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(",");
    t.row(vec![
        "max_discrepancy".into(),
        fmt_f64(r.max_discrepancy_pair.0),
        fmt_vec(&r.max_discrepancy_pair.1),
        fmt_vec(&r.max_discrepancy_pair.2),
    ]);
    t.row(vec![
        "worst_ratio".into(),
        fmt_f64(r.worst_pair.0),
        fmt_vec(&r.worst_pair.1),
        fmt_vec(&r.worst_pair.2),
    ]);
    doc.push_table(t);
    doc
}

pub fn growth_report_doc(r: &GrowthBoundReport) -> ReportDoc {
    let mut doc = ReportDoc::new("growth-bound-report");
    doc.field("k1", fmt_f64(r.k1))
        .field("max_ratio", fmt_f64(r.max_ratio))
        .field("pass", r.pass)
        .field("samples", r.samples);
    doc
}

pub fn osgood_report_doc(r: &OsgoodEvidence) -> ReportDoc {
    let mut doc = ReportDoc::new("osgood-report");
    doc.field("modulus", &r.modulus)
        .field(
            "verdict",
            match r.verdict {
                OsgoodVerdict::Divergent => "divergent",
                OsgoodVerdict::Convergent => "convergent",
            },
        )
        .field("growth_floor", fmt_f64(r.growth_floor))
        .field("note", OsgoodEvidence::DISCLAIMER);
    let mut t = Table::new("tail_integrals", &["eps", "integral", "growth_per_decade"]);
    for (i, (&e, &v)) in r.eps.iter().zip(&r.integrals).enumerate() {
        let g = if i == 0 {
            String::new()
        } else {
            fmt_f64(r.growth_per_decade[i - 1])
        };
        t.row(vec![fmt_f64(e), fmt_f64(v), g]);
    }
    doc.push_table(t);
    doc
}

pub fn moment_report_doc(r: &MomentBoundReport) -> ReportDoc {
    let mut doc = ReportDoc::new("moment-bound-report");
    doc.field("bound", fmt_f64(r.bound))
        .field("k1", fmt_f64(r.k1))
        .field("e_xi_sq", fmt_f64(r.e_xi_sq))
        .field("empirical_max", fmt_f64(r.empirical_max))
        .field("se_at_max", fmt_f64(r.se_at_max))
        .field("argmax_iterate", r.argmax_iterate)
        .field("argmax_node", r.argmax_node)
        .field("pass", r.pass);
    if r.horizon_below_one {
        doc.field(
            "warning",
            "bound formula is stated for horizons >= 1; evaluated anyway",
        );
    }
    doc
}

pub fn uniqueness_report_doc(r: &UniquenessReport) -> ReportDoc {
    let mut doc = ReportDoc::new("uniqueness-report");
    doc.field("replay_max_diff", fmt_f64(r.replay_max_diff))
        .field("permuted_max_diff", fmt_f64(r.permuted_max_diff))
        .field("distinct_seed_diff", fmt_f64(r.distinct_seed_diff))
        .field("iterations", r.iterations)
        .field("pass", r.pass);
    doc
}

pub fn stability_report_doc(r: &StabilityReport) -> ReportDoc {
    let mut doc = ReportDoc::new("stability-report");
    doc.field("eps", fmt_f64(r.eps))
        .field("kappa3", &r.kappa3_desc)
        .field("estimate", fmt_f64(r.estimate))
        .field("se", fmt_f64(r.se))
        .field("initial_gap_sq", fmt_f64(r.initial_gap_sq))
        .field("initial_gap_sq_x4", fmt_f64(r.initial_gap_sq_x4))
        .field("assumption1_pass", r.assumption1_pass)
        .field("pass", r.pass);
    match r.delta {
        Some(d) => {
            doc.field("delta", fmt_f64(d));
            if let Some(held) = r.precondition_held {
                doc.field("precondition_4gap_le_delta", held);
            }
        }
        None => {
            doc.field(
                "certificate",
                r.certificate_error.as_deref().unwrap_or("unavailable"),
            );
        }
    }
    if !r.assumption1_pass {
        doc.field(
            "certificate_applicability",
            "coefficient condition failed empirically; certificate inapplicable",
        );
    }
    doc
}

pub fn certificate_doc(c: &StabilityCertificate) -> ReportDoc {
    let mut doc = ReportDoc::new("stability-certificate");
    doc.field("eps", fmt_f64(c.eps))
        .field("eps1", fmt_f64(c.eps1))
        .field("delta", fmt_f64(c.delta))
        .field("kappa3_factor", fmt_f64(c.kappa3_factor))
        .field("recheck_integral", fmt_f64(c.recheck_integral))
        .field("horizon", fmt_f64(c.horizon));
    doc
}

pub fn bihari_bound_doc(b: &BihariBound) -> ReportDoc {
    let mut doc = ReportDoc::new("bihari-bound");
    doc.field("modulus", b.modulus.name())
        .field("u0", fmt_f64(b.u0));
    let mut t = Table::new("g_table", &["q", "g"]);
    for &(q, g) in b.table() {
        t.row(vec![fmt_f64(q), fmt_f64(g)]);
    }
    doc.push_table(t);
    doc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_rendering_round_trips() {
        for x in [
            0.0,
            1.0,
            -0.1,
            1e-300,
            123.45678901234567,
            f64::MIN_POSITIVE,
        ] {
            let s = fmt_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(x.to_bits(), back.to_bits(), "{s}");
        }
    }

    #[test]
    fn doc_renders_fields_then_tables() {
        let mut doc = ReportDoc::new("demo");
        doc.field("alpha", 1).field("beta", "two");
        let mut t = Table::new("rows", &["a", "b"]);
        t.row(vec!["1".into(), "2".into()]);
        doc.push_table(t);
        let text = doc.render();
        assert!(text.starts_with("# demo\nalpha 1\nbeta two\n"));
        assert!(text.contains("[rows]\na\tb\n1\t2\n"));
    }

    #[test]
    fn every_report_kind_renders_in_the_shared_format() {
        use crate::modulus::{check_osgood, default_eps_sequence, ConcaveModulus, Lambda};
        use crate::stability::{delta_for_epsilon, BihariBound};

        let m = ConcaveModulus::linear().with_lambda(Lambda::Constant(1.0 / 16.0));
        let evidence = check_osgood(&m, &default_eps_sequence()).unwrap();
        let doc = osgood_report_doc(&evidence).render();
        assert!(doc.starts_with("# osgood-report\n"));
        assert!(doc.contains("[tail_integrals]"), "{doc}");

        let cert = delta_for_epsilon(&m, 1.0, 1.0).unwrap();
        let doc = certificate_doc(&cert).render();
        assert!(doc.starts_with("# stability-certificate\n"));
        assert!(doc.contains("delta "), "{doc}");

        let bound = BihariBound::new(ConcaveModulus::linear(), 0.1, Lambda::Constant(1.0)).unwrap();
        let doc = bihari_bound_doc(&bound).render();
        assert!(doc.starts_with("# bihari-bound\n"));
        assert!(doc.contains("[g_table]"), "{doc}");

        let growth = crate::coeffs::GrowthBoundReport {
            k1: 2.0,
            max_ratio: 1.5,
            worst_y: vec![0.0],
            pass: true,
            samples: 100,
        };
        let doc = growth_report_doc(&growth).render();
        assert!(doc.starts_with("# growth-bound-report\n"));
    }
}

use std::io::{self, Write};

use crate::robustness::{GProfile, RobustnessReport};
use crate::smoothing::GapCurve;

pub const SWEEP_HEADER: &str = "sigma,w2_exact,w2_got_mean,w2_got_stderr,gap,gap_sq,r_hat,lb_general,exp_bound_value";

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Comment line, header and one row per `σ`. Numbers use the shortest
/// representation that round-trips.
pub fn write_sweep<W: Write + ?Sized>(w: &mut W, comment: &str, curve: &GapCurve) -> io::Result<()> {
    writeln!(w, "# got-lab sweep v1 {comment}")?;
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in &curve.records {
        let row = [
            num(r.sigma),
            num(r.w2_exact),
            num(r.got.mean),
            num(r.got.stderr),
            num(r.gap),
            num(r.gap_sq),
            opt(curve.r_hat),
            opt(curve.lb_general),
            opt(r.exp_bound_value),
        ];
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn write_report<W: Write + ?Sized>(w: &mut W, comment: &str, rep: &RobustnessReport) -> io::Result<()> {
    writeln!(w, "# got-lab robustness v1 {comment}")?;
    writeln!(w, "lambda_star,lb_general,alpha,beta,lb_convex,lb_simplified,r_hat")?;
    let row = [
        num(rep.lambda_star),
        num(rep.lb_general),
        opt(rep.alpha_beta.map(|ab| ab.0)),
        opt(rep.alpha_beta.map(|ab| ab.1)),
        opt(rep.lb_convex),
        opt(rep.lb_simplified),
        opt(rep.r_hat),
    ];
    writeln!(w, "{}", row.join(","))
}

pub fn write_profile<W: Write + ?Sized>(w: &mut W, comment: &str, prof: &GProfile) -> io::Result<()> {
    writeln!(w, "# got-lab g-profile v1 {comment}")?;
    writeln!(w, "m,g,best_cycle,spread")?;
    for p in &prof.points {
        let cycle = p
            .best_cycle
            .as_ref()
            .map(|c| c.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" "))
            .unwrap_or_default();
        writeln!(w, "{},{},{},{}", num(p.m), num(p.value), cycle, num(p.spread))?;
    }
    Ok(())
}

use std::fmt::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use matfix_core::bounds::{default_membership_tol, SCALAR_MAX_ITER, SCALAR_TOL};
use matfix_core::conditioning::cond_real;
use matfix_core::linalg::{frobenius_norm, spectral_norm};
use matfix_core::reproduce::{self, reference};
use matfix_core::{
    backward_bound, build_bundle, build_bundle_general, coarse_interval, cond_complex,
    cond_fd_oracle, feasibility_table, first_order_delta, membership, refined_interval,
    scalar_bounds, solve, solve_general, xi1, xi2, xi3, BoundReport, Case, ComplexMatrix,
    EquationData, EquationInstance, Error, Execution, GeneralInstance, HermitianMatrix,
    MatrixInterval, Mode, OracleSettings, SolveSettings, StartPolicy,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::io::{read_matrix, InstanceFile, MatrixObject};
use crate::render::{deviation, fixed, matrix, opt_sci, sci, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    Invalid = 1,
    NoConvergence = 2,
    Infeasible = 3,
}

pub struct Output {
    pub report: Value,
    pub text: String,
    pub status: Status,
}

/// Exit status for an error raised anywhere in a command.
pub fn classify(err: &anyhow::Error) -> Status {
    match err.downcast_ref::<Error>() {
        Some(Error::MaxIterationsExceeded { .. } | Error::SingularIterate { .. }) => Status::NoConvergence,
        Some(Error::ConditionViolated { .. }) => Status::Infeasible,
        _ => Status::Invalid,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub x0: String,
    pub allow_nonhermitian: bool,
}

impl SolveOptions {
    fn settings(&self) -> Result<SolveSettings> {
        let start = parse_start(&self.x0)?;
        Ok(SolveSettings::default()
            .with_tol(self.tol)
            .with_max_iter(self.max_iter)
            .with_start(start))
    }
}

pub fn parse_start(spec: &str) -> Result<StartPolicy> {
    Ok(match spec {
        "q" => StartPolicy::Q,
        "identity" => StartPolicy::ScaledIdentity(1.0),
        _ => match spec.split_once(':') {
            Some(("scale", c)) => StartPolicy::ScaledIdentity(
                c.parse().with_context(|| format!("--x0 scale:<c>: cannot read {c:?}"))?,
            ),
            Some(("file", p)) => StartPolicy::Explicit(read_matrix(Path::new(p))?),
            _ => bail!("--x0 must be q, identity, scale:<c> or file:<path>, got {spec:?}"),
        },
    })
}

enum Data {
    Hermitian(EquationInstance),
    General(GeneralInstance),
}

impl Data {
    fn load(path: &Path, allow_nonhermitian: bool) -> Result<Self> {
        let raw = InstanceFile::read(path)?.matrices()?;
        Ok(if allow_nonhermitian {
            Data::General(GeneralInstance::new(raw.a, raw.q)?)
        } else {
            Data::Hermitian(EquationInstance::new(raw.a, raw.q)?)
        })
    }

    fn as_data(&self) -> &(dyn EquationData + Sync) {
        match self {
            Data::Hermitian(i) => i,
            Data::General(g) => g,
        }
    }
}

fn load_hermitian(path: &Path) -> Result<EquationInstance> {
    let raw = InstanceFile::read(path)?.matrices()?;
    Ok(EquationInstance::new(raw.a, raw.q)?)
}

struct Solved {
    x: ComplexMatrix,
    iterations: usize,
    residual_norm: f64,
    converged: bool,
    history: Vec<f64>,
}

fn run_solve(data: &Data, settings: &SolveSettings) -> Result<Solved> {
    Ok(match data {
        Data::Hermitian(i) => {
            let r = solve(i, settings)?;
            Solved {
                x: r.x.into_matrix(),
                iterations: r.iterations,
                residual_norm: r.residual_norm,
                converged: r.converged,
                history: r.history,
            }
        }
        Data::General(g) => {
            let r = solve_general(g, settings)?;
            Solved {
                x: r.x,
                iterations: r.iterations,
                residual_norm: r.residual_norm,
                converged: r.converged,
                history: r.history,
            }
        }
    })
}

fn solve_json(s: &Solved) -> Value {
    json!({
        "iterations": s.iterations,
        "converged": s.converged,
        "residual_norm": s.residual_norm,
        "residual_history": s.history,
        "x": MatrixObject::from_matrix(&s.x),
    })
}

fn solve_text(s: &Solved) -> String {
    format!(
        "{} after {} iterations, residual {}\nX =\n{}",
        if s.converged { "converged" } else { "NOT converged" },
        s.iterations,
        sci(s.residual_norm),
        matrix(&s.x)
    )
}

fn hermitian_x(x: &ComplexMatrix) -> Result<HermitianMatrix> {
    Ok(HermitianMatrix::from_upper(x)?)
}

pub fn cmd_solve(input: &Path, opts: &SolveOptions) -> Result<Output> {
    let data = Data::load(input, opts.allow_nonhermitian)?;
    let solved = run_solve(&data, &opts.settings()?)?;
    let mut report = json!({ "solve": solve_json(&solved) });
    let mut text = solve_text(&solved);
    if let Data::Hermitian(inst) = &data {
        let x = hermitian_x(&solved.x)?;
        let sb = scalar_bounds(inst, SCALAR_TOL, SCALAR_MAX_ITER)?;
        let coarse = coarse_interval(inst)?;
        let refined = refined_interval(inst, &sb)?;
        let boxed = MatrixInterval::scalar(inst.n(), sb.beta, sb.alpha);
        let check = |iv: &MatrixInterval| -> Result<bool> {
            Ok(membership(&x, iv, default_membership_tol(iv) + opts.tol)?)
        };
        let member = json!({
            "coarse": check(&coarse)?,
            "refined": check(&refined)?,
            "scalar": check(&boxed)?,
        });
        let _ = writeln!(
            text,
            "beta = {:.6}, alpha = {:.6}\nin [Q, Q + sum A*Q^-1 A]: {}\nin refined interval: {}\nin [beta I, alpha I]: {}",
            sb.beta, sb.alpha, member["coarse"], member["refined"], member["scalar"]
        );
        report["scalar_bounds"] = json!({
            "alpha": sb.alpha, "beta": sb.beta, "iterations": sb.iterations, "converged": sb.converged,
        });
        report["membership"] = member;
    }
    let status = if solved.converged { Status::Ok } else { Status::NoConvergence };
    Ok(Output { report, text, status })
}

pub fn cmd_bounds(input: &Path) -> Result<Output> {
    let inst = load_hermitian(input)?;
    let sb = scalar_bounds(&inst, SCALAR_TOL, SCALAR_MAX_ITER)?;
    let coarse = coarse_interval(&inst)?;
    let refined = refined_interval(&inst, &sb)?;
    let interval = |iv: &MatrixInterval| {
        json!({ "lower": MatrixObject::from_matrix(&iv.lower), "upper": MatrixObject::from_matrix(&iv.upper) })
    };
    let report = json!({
        "scalar_bounds": sb,
        "coarse": interval(&coarse),
        "refined": interval(&refined),
    });
    let text = format!(
        "beta = {:.6}, alpha = {:.6} ({} steps)\ncoarse upper =\n{}refined lower =\n{}refined upper =\n{}",
        sb.beta,
        sb.alpha,
        sb.iterations,
        matrix(&coarse.upper),
        matrix(&refined.lower),
        matrix(&refined.upper)
    );
    Ok(Output {
        report,
        text,
        status: Status::Ok,
    })
}

#[derive(Serialize)]
struct BoundEntry {
    kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<BoundReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

pub fn cmd_analyze(input: &Path, delta: &Path, opts: &SolveOptions, mode: Mode) -> Result<Output> {
    let inst = load_hermitian(input)?;
    let spec = InstanceFile::read(delta)?
        .perturbation()
        .with_context(|| format!("in {}", delta.display()))?;
    spec.check_against(&inst)?;
    let solved = run_solve(&Data::Hermitian(inst.clone()), &opts.settings()?)?;
    if !solved.converged {
        return Ok(Output {
            report: json!({ "solve": solve_json(&solved) }),
            text: solve_text(&solved),
            status: Status::NoConvergence,
        });
    }
    let x = hermitian_x(&solved.x)?;
    let sb = scalar_bounds(&inst, SCALAR_TOL, SCALAR_MAX_ITER)?;
    let bundle = build_bundle(&inst, &x)?;
    let table = feasibility_table(&inst, &sb, &bundle, &spec)?;

    let mut infeasible = false;
    let mut entries = Vec::new();
    let results = [
        ("xi1", xi1(&inst, &sb, &spec)),
        ("xi2", xi2(&inst, &x, &sb, &spec)),
        ("xi3", xi3(&inst, &x, &bundle, &spec)),
    ];
    for (kind, r) in results {
        entries.push(match r {
            Ok(rep) => BoundEntry {
                kind,
                report: Some(rep),
                error: None,
            },
            Err(e) => {
                infeasible |= matches!(e, Error::ConditionViolated { .. });
                BoundEntry {
                    kind,
                    report: None,
                    error: Some(e.to_string()),
                }
            }
        });
    }
    let cc = cond_complex(&inst, &x, &bundle, mode)?.without_blocks();
    let cr = if inst.a().iter().all(|a| a.max_imag() == 0.0) && inst.q().max_imag() == 0.0 {
        Some(cond_real(&inst, &x, mode)?.without_blocks())
    } else {
        None
    };
    let dx = first_order_delta(&bundle, &spec)?;

    let mut text = solve_text(&solved);
    let mut t = Table::new(["condition", "value", "pass"]);
    for c in &table.entries {
        t.row([c.name.clone(), format!("{:.6e}", c.value), c.pass.to_string()]);
    }
    text.push_str(&t.render());
    let mut t = Table::new(["bound", "relative", "absolute", "note"]);
    for e in &entries {
        match (&e.report, &e.error) {
            (Some(r), _) => t.row([e.kind.to_string(), sci(r.relative_bound), opt_sci(r.absolute_bound), String::new()]),
            (_, Some(err)) => t.row([e.kind.to_string(), "-".into(), "-".into(), err.clone()]),
            _ => unreachable!(),
        };
    }
    text.push_str(&t.render());
    let _ = writeln!(text, "condition number ({mode:?}, complex): {:.6}", cc.value);
    if let Some(cr) = &cr {
        let _ = writeln!(text, "condition number ({mode:?}, real): {:.6}", cr.value);
    }
    let _ = writeln!(
        text,
        "first-order change: ||dX|| = {}, ||dX||/||X|| = {}",
        sci(spectral_norm(&dx)),
        sci(spectral_norm(&dx) / spectral_norm(&x))
    );

    let report = json!({
        "solve": solve_json(&solved),
        "beta": sb.beta,
        "feasibility": table,
        "bounds": entries,
        "condition": { "complex": cc, "real": cr },
        "first_order": {
            "delta_x": MatrixObject::from_matrix(&dx),
            "norm": spectral_norm(&dx),
            "frobenius_norm": frobenius_norm(&dx),
        },
    });
    Ok(Output {
        report,
        text,
        status: if infeasible { Status::Infeasible } else { Status::Ok },
    })
}

pub fn cmd_backward(input: &Path, approx: &Path) -> Result<Output> {
    let inst = load_hermitian(input)?;
    let xt = read_matrix(approx)?;
    if xt.rows() != inst.n() {
        bail!("approximation has order {}, equation has order {}", xt.rows(), inst.n());
    }
    let xt = HermitianMatrix::try_from_matrix(&xt, 64.0 * f64::EPSILON * xt.max_abs().max(1.0))
        .context("approximate solution")?;
    let rep = backward_bound(&inst, &xt)?;
    let text = format!(
        "Sigma = {:.6e}\n||R|| = {}\nthreshold = {}\nfeasible = {}\ntheta = {}\nbound on ||X~ - X|| = {}\n",
        rep.sigma,
        sci(rep.residual_norm),
        sci(rep.threshold),
        rep.feasible,
        opt_sci(rep.theta),
        opt_sci(rep.bound)
    );
    let status = if rep.feasible { Status::Ok } else { Status::Infeasible };
    Ok(Output {
        report: json!({ "backward": rep }),
        text,
        status,
    })
}

pub struct CondOptions {
    pub mode: Mode,
    pub case: Case,
    pub oracle_trials: usize,
    pub step: f64,
    pub seed: u64,
}

pub fn cmd_cond(input: &Path, opts: &SolveOptions, c: &CondOptions) -> Result<Output> {
    let data = Data::load(input, opts.allow_nonhermitian)?;
    let solved = run_solve(&data, &opts.settings()?)?;
    if !solved.converged {
        return Ok(Output {
            report: json!({ "solve": solve_json(&solved) }),
            text: solve_text(&solved),
            status: Status::NoConvergence,
        });
    }
    let d = data.as_data();
    let rep = match c.case {
        Case::Complex => {
            let bundle = build_bundle_general(d, &solved.x)?;
            cond_complex(d, &solved.x, &bundle, c.mode)?
        }
        Case::Real => cond_real(d, &solved.x, c.mode)?,
    }
    .without_blocks();
    let mut text = format!(
        "converged after {} iterations, residual {}\ncondition number ({:?}, {:?}) = {:.6}\n",
        solved.iterations,
        sci(solved.residual_norm),
        c.mode,
        c.case,
        rep.value
    );
    let mut report = json!({ "solve": solve_json(&solved), "condition": rep });
    if c.oracle_trials > 0 {
        let est = cond_fd_oracle(
            d,
            &solved.x,
            &OracleSettings {
                mode: c.mode,
                case: c.case,
                step: c.step,
                trials: c.oracle_trials,
                seed: c.seed,
                ..OracleSettings::default()
            },
        )?;
        let _ = writeln!(text, "finite-difference estimate ({} trials) = {est:.6}", c.oracle_trials);
        report["oracle"] = json!({ "estimate": est, "trials": c.oracle_trials, "step": c.step, "seed": c.seed });
    }
    Ok(Output {
        report,
        text,
        status: Status::Ok,
    })
}

pub fn cmd_reproduce(example: u8, seed: u64, runs: usize, exec: Execution) -> Result<Output> {
    match example {
        1 => reproduce_1(),
        2 => reproduce_2(seed, runs, exec),
        3 => reproduce_3(),
        4 => reproduce_4(),
        _ => bail!("example must be 1, 2, 3 or 4"),
    }
}

fn reproduce_1() -> Result<Output> {
    let r = &reference().example1;
    let rep = reproduce::run_example1()?;
    let mut t = Table::new(["quantity", "computed", "reference", "deviation"]);
    t.row(["beta".into(), format!("{:.6}", rep.beta), fixed(r.beta), deviation(rep.beta, r.beta)]);
    t.row(["alpha".into(), format!("{:.6}", rep.alpha), fixed(r.alpha), deviation(rep.alpha, r.alpha)]);
    t.row([
        "iterations".into(),
        rep.iterations.to_string(),
        r.iterations.to_string(),
        format!("{:+}", rep.iterations as i64 - r.iterations as i64),
    ]);
    t.row(["residual".into(), sci(rep.residual_norm), sci(r.residual), deviation(rep.residual_norm, r.residual)]);
    let mut text = format!("Example 1: X0 = 1.1 I, tol 1e-10\n{}", t.render());
    let _ = writeln!(text, "max |X - printed X| = {:.2e}", rep.max_deviation);
    Ok(Output {
        report: json!({ "example": 1, "result": rep }),
        text,
        status: Status::Ok,
    })
}

type Column<'a> = (&'a str, fn(&reproduce::Example2Report) -> f64, &'a Vec<f64>);

fn reproduce_2(seed: u64, runs: usize, exec: Execution) -> Result<Output> {
    let r = &reference().example2;
    let reps = r
        .j
        .iter()
        .map(|&j| reproduce::run_example2(j, seed, runs, exec))
        .collect::<matfix_core::Result<Vec<_>>>()?;
    let mut header = vec!["j".to_string()];
    header.extend(r.j.iter().map(|j| j.to_string()));
    let mut conds = Table::new(header.clone());
    for (i, name) in ["con1", "con2", "con3", "con4", "con5", "con6"].iter().enumerate() {
        let mut cells = vec![name.to_string()];
        let mut refs = vec![format!("  ref")];
        for (col, rep) in reps.iter().enumerate() {
            cells.push(fixed(rep.conditions.entries[i].value));
            refs.push(fixed(r.conditions(col)[i]));
        }
        conds.row(cells);
        conds.row(refs);
    }
    let mut bounds = Table::new(header);
    let rows: [Column; 4] = [
        ("rel. error (geo. mean)", |x| x.true_error, &r.true_error),
        ("xi1", |x| x.xi1, &r.xi1),
        ("xi2", |x| x.xi2, &r.xi2),
        ("nu* = xi3/||X||", |x| x.nu_star, &r.nu_star),
    ];
    for (name, get, refs) in rows {
        let mut cells = vec![name.to_string()];
        let mut refc = vec!["  ref".to_string()];
        let mut dev = vec!["  deviation".to_string()];
        for (col, rep) in reps.iter().enumerate() {
            cells.push(sci(get(rep)));
            refc.push(sci(refs[col]));
            dev.push(deviation(get(rep), refs[col]));
        }
        bounds.row(cells);
        bounds.row(refc);
        bounds.row(dev);
    }
    let mut xi3_row = vec!["xi3 (absolute)".to_string()];
    xi3_row.extend(reps.iter().map(|rep| sci(rep.xi3)));
    bounds.row(xi3_row);
    let text = format!(
        "Example 2: feasibility conditions\n{}\nExample 2: relative perturbation bounds ({} runs, seed {})\n{}",
        conds.render(),
        runs,
        seed,
        bounds.render()
    );
    Ok(Output {
        report: json!({ "example": 2, "seed": seed, "runs": runs, "columns": reps }),
        text,
        status: Status::Ok,
    })
}

fn reproduce_3() -> Result<Output> {
    let r = &reference().example3;
    let rows = reproduce::run_example3(r.k.len())?;
    let mut t = Table::new(["k", "||X_k - X||", "ref", "deviation", "theta||R||", "ref", "deviation"]);
    for (i, row) in rows.iter().enumerate() {
        let bound = row.bound.unwrap_or(f64::NAN);
        t.row([
            row.k.to_string(),
            sci(row.true_error),
            sci(r.true_error[i]),
            deviation(row.true_error, r.true_error[i]),
            sci(bound),
            sci(r.bound[i]),
            deviation(bound, r.bound[i]),
        ]);
    }
    Ok(Output {
        report: json!({ "example": 3, "rows": rows }),
        text: format!("Example 3: iterates from X0 = A\n{}", t.render()),
        status: Status::Ok,
    })
}

fn reproduce_4() -> Result<Output> {
    let r = &reference().example4;
    let rows = reproduce::run_example4(&r.k)?;
    let mut t = Table::new(["k", "c_rel", "ref", "deviation", "symmetrized Q", "source"]);
    for (i, row) in rows.iter().enumerate() {
        t.row([
            row.k.to_string(),
            fixed(row.c_rel),
            fixed(r.c_rel[i]),
            deviation(row.c_rel, r.c_rel[i]),
            row.symmetrized.map_or_else(|| "-".into(), fixed),
            if row.substituted { "symmetrized (substituted)" } else { "as printed" }.to_string(),
        ]);
    }
    Ok(Output {
        report: json!({ "example": 4, "rows": rows }),
        text: format!("Example 4: relative condition number, Q as printed\n{}", t.render()),
        status: Status::Ok,
    })
}

/// Writes the shipped example instances as JSON documents.
pub fn write_fixtures(dir: &Path) -> Result<()> {
    let save = |name: &str, a: &[ComplexMatrix], q: &ComplexMatrix| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, InstanceFile::from_matrices(a, q).to_json() + "\n")
            .with_context(|| format!("writing {}", path.display()))
    };
    let e1 = reproduce::example1();
    save("example1.json", e1.a(), e1.q())?;
    let e2 = reproduce::example2();
    save("example2.json", e2.a(), e2.q())?;
    let e3 = reproduce::example3();
    save("example3.json", e3.a(), e3.q())?;
    let e4 = reproduce::example4(1);
    save("example4_k1.json", e4.a(), e4.q())?;
    let d = reproduce::example2_delta(7, &reproduce::base_matrix());
    save("example2_delta_j7.json", &d.da, &d.dq)?;
    Ok(())
}

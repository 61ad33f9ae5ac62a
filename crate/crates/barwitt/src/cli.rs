//! The `barwitt` command-line interface: each subcommand loads a TOML model
//! file, runs one pipeline, prints a report, and exits 0 if every check
//! passed, 1 if a check failed, 2 on hard errors (bad file, missing
//! structure). The `check` subcommand never exits 2 for model defects: it
//! converts them into failed ledger lines with a located witness.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::bar::{
    abelianization_check, bar_of_filtered, build_bar, check_multiplicative, eilenberg_moore,
    h0_hopf, weight_on_h0,
};
use crate::cdga::{Augmentation, Cdga, Frobenius};
use crate::cosimp::{constant_cosimplicial, integration, nerve_cdga, thom_whitney, total_s};
use crate::filt::{check_mfc, Filtration, MixedFrobeniusAlgebra};
use crate::gla::{cohomology, GradedMap};
use crate::model::{self, BuiltModel};
use crate::monodromy::{base_frobenius, coboundary_compare, pi1_with_structures, restriction_qi};
use crate::report::{bidims_json, dims_json, mat_json, Report};

#[derive(Parser, Debug)]
#[command(name = "barwitt", about = "exact bar-construction and weight-structure toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug)]
pub struct Common {
    /// Path to a TOML model file
    pub model: PathBuf,
    /// Also write the report as JSON to this path
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Cohomology of the model algebra, with the CDGA axioms verified
    Cohomology {
        #[command(flatten)]
        common: Common,
    },
    /// Bar complex dimensions and H^0(B) of the (base) algebra
    Bar {
        #[command(flatten)]
        common: Common,
        /// Bar word-length cutoff
        #[arg(long, default_value_t = 2)]
        level: usize,
    },
    /// Fundamental Lie algebra data of H^0(B): primitives, Lie dims
    Pi1 {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2)]
        level: usize,
    },
    /// Eilenberg-Moore spectral sequence of the bar filtration
    EmSs {
        #[command(flatten)]
        common: Common,
        /// Pages to compute (also bounds the word length)
        #[arg(long, default_value_t = 2)]
        pages: i64,
    },
    /// Thom-Whitney end of the associated cosimplicial algebra
    Tw {
        #[command(flatten)]
        common: Common,
    },
    /// Nerve input checks plus the Thom-Whitney end of the nerve
    Nerve {
        #[command(flatten)]
        common: Common,
    },
    /// Weight filtration on H^0(B); purity when a Frobenius is present
    Weights {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2)]
        level: usize,
    },
    /// Monodromy pipeline on a theta-extension model
    Monodromy {
        #[command(flatten)]
        common: Common,
        /// Divided-power truncation depth of the u-extension
        #[arg(long, default_value_t = 4)]
        depth: usize,
        #[arg(long, default_value_t = 3)]
        level: usize,
    },
    /// Run every applicable validator and print a pass/fail ledger
    Check {
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Cohomology { common }
            | Command::Bar { common, .. }
            | Command::Pi1 { common, .. }
            | Command::EmSs { common, .. }
            | Command::Tw { common }
            | Command::Nerve { common }
            | Command::Weights { common, .. }
            | Command::Monodromy { common, .. }
            | Command::Check { common } => common,
        }
    }
}

/// The full algebra of the model (the theta-extension total when present).
fn full_algebra(bm: &BuiltModel) -> Result<&Cdga, String> {
    bm.algebra.as_ref().ok_or_else(|| "model declares no algebra".to_string())
}

/// The algebra the bar construction runs on: the theta-extension base when
/// present, otherwise the model algebra itself.
fn bar_algebra(bm: &BuiltModel) -> Result<&Cdga, String> {
    match &bm.theta {
        Some(t) => Ok(&t.base),
        None => full_algebra(bm),
    }
}

/// The Frobenius acting on the bar algebra: restricted to the base along the
/// theta-extension when one is present.
fn bar_frobenius(bm: &BuiltModel) -> Result<Option<Frobenius>, String> {
    match (&bm.frobenius, &bm.theta) {
        (None, _) => Ok(None),
        (Some(f), None) => Ok(Some(f.clone())),
        (Some(f), Some(t)) => base_frobenius(t, f).map(Some).map_err(|e| e.to_string()),
    }
}

fn cmd_cohomology(bm: &BuiltModel, r: &mut Report) -> Result<(), String> {
    let a = full_algebra(bm)?;
    if !r.check_result("cdga axioms", &a.validate()) {
        return Ok(());
    }
    let h = cohomology(&a.complex()).map_err(|e| e.to_string())?;
    r.add("space_dims", dims_json(&a.space.dims()));
    r.add("h_dims", dims_json(&h.space.dims()));
    r.check("cohomology computed", true, "");
    Ok(())
}

fn cmd_bar(bm: &BuiltModel, level: usize, r: &mut Report) -> Result<(), String> {
    let a = bar_algebra(bm)?;
    a.validate().map_err(|e| e.to_string())?;
    let aug = Augmentation::connected(a).map_err(|e| e.to_string())?;
    let b = build_bar(a, &aug, level).map_err(|e| e.to_string())?;
    let word_dims: std::collections::BTreeMap<(i64, i64), usize> =
        b.words.iter().map(|(&(s, t), w)| ((s as i64, t), w.len())).collect();
    r.add("bar_word_dims", bidims_json(&word_dims));
    let hopf = h0_hopf(&b).map_err(|e| e.to_string())?;
    r.add("h0_dim", json!(hopf.h0_dim()));
    r.add("b_dims", json!(hopf.b_dims));
    r.check("hopf structure on H^0(B) computed", true, "");
    Ok(())
}

fn cmd_pi1(bm: &BuiltModel, level: usize, r: &mut Report) -> Result<(), String> {
    let a = bar_algebra(bm)?;
    a.validate().map_err(|e| e.to_string())?;
    let aug = Augmentation::connected(a).map_err(|e| e.to_string())?;
    let b = build_bar(a, &aug, level).map_err(|e| e.to_string())?;
    let hopf = h0_hopf(&b).map_err(|e| e.to_string())?;
    r.add("b_dims", json!(hopf.b_dims));
    r.add("lie_dims", json!(hopf.lie_dims));
    r.add("primitive_dims", json!(hopf.primitive_dims));
    let ab = abelianization_check(&b, &hopf).map_err(|e| e.to_string())?;
    r.add("b1_dim", json!(ab.b1_dim));
    r.add("h1_dim", json!(ab.h1_dim));
    r.check("B_1 = 1 + dim H^1", ab.b1_dim == 1 + ab.h1_dim, format!("B_1 = {}, H^1 = {}", ab.b1_dim, ab.h1_dim));
    r.check("level-1 classes are primitive", ab.level1_primitive, "");
    Ok(())
}

fn cmd_em_ss(bm: &BuiltModel, pages: i64, r: &mut Report) -> Result<(), String> {
    let a = bar_algebra(bm)?;
    a.validate().map_err(|e| e.to_string())?;
    let aug = Augmentation::connected(a).map_err(|e| e.to_string())?;
    let b = build_bar(a, &aug, pages.max(1) as usize).map_err(|e| e.to_string())?;
    let ss = eilenberg_moore(&b, pages).map_err(|e| e.to_string())?;
    let e1 = &ss.pages[1.min(ss.pages.len() - 1)];
    r.add("e1_dims", bidims_json(&e1.dims()));
    r.add("e_inf_dims", bidims_json(&ss.e_inf.dims()));
    let corner: Vec<usize> = (0..=pages)
        .map(|s| e1.pieces.get(&(s, 0)).map(|p| p.dim()).unwrap_or(0))
        .collect();
    r.add("corner_dims", json!(corner));
    r.check("spectral sequence computed", true, "");
    Ok(())
}

fn tw_of_cosimplicial(
    g: &crate::cosimp::CosimplicialCdga,
    r: &mut Report,
) -> Result<(), String> {
    if !r.check_result("cosimplicial identities", &g.validate()) {
        return Ok(());
    }
    let tw = thom_whitney(g, 4).map_err(|e| e.to_string())?;
    r.add("tw_h_dims", dims_json(&tw.h.space.dims()));
    r.check("thom-whitney end computed", true, "");
    let s = total_s(g);
    let ok = integration(g, &tw, &s);
    r.check_result("integration map is a chain map", &ok);
    Ok(())
}

fn cmd_tw(bm: &BuiltModel, r: &mut Report) -> Result<(), String> {
    match &bm.nerve {
        Some(n) => {
            n.check_squares().map_err(|e| e.to_string())?;
            let g = nerve_cdga(n, 2).map_err(|e| e.to_string())?;
            tw_of_cosimplicial(&g, r)
        }
        None => {
            let a = full_algebra(bm)?;
            a.validate().map_err(|e| e.to_string())?;
            let g = constant_cosimplicial(a, 2);
            tw_of_cosimplicial(&g, r)
        }
    }
}

fn cmd_nerve(bm: &BuiltModel, r: &mut Report) -> Result<(), String> {
    let n = bm.nerve.as_ref().ok_or_else(|| "model declares no nerve".to_string())?;
    if !r.check_result("nerve squares commute", &n.check_squares()) {
        return Ok(());
    }
    let g = nerve_cdga(n, 2).map_err(|e| e.to_string())?;
    tw_of_cosimplicial(&g, r)
}

fn mfc_checks(a: &Cdga, f: &Frobenius, w: &Filtration, r: &mut Report) {
    let mfa = MixedFrobeniusAlgebra {
        m: a.clone(),
        m_frob: f.clone(),
        n: a.clone(),
        n_filt: w.clone(),
        n_frob: f.clone(),
        qis: GradedMap::identity(&a.space),
    };
    match check_mfc(&mfa.to_mfc()) {
        Ok(rep) => {
            let purity: std::collections::BTreeMap<String, String> = rep
                .e1
                .iter()
                .map(|(&(p, q), (d, v))| (format!("({p},{q})"), format!("dim {d}, {v:?}")))
                .collect();
            r.add("e1_purity", json!(purity));
            r.check("mixed frobenius structure", rep.passed(), rep.failures.join("; "));
        }
        Err(e) => r.check("mixed frobenius structure", false, e.to_string()),
    }
}

fn cmd_weights(bm: &BuiltModel, level: usize, r: &mut Report) -> Result<(), String> {
    let a = bar_algebra(bm)?;
    a.validate().map_err(|e| e.to_string())?;
    let w = bm.weights.as_ref().ok_or_else(|| "model declares no weights".to_string())?;
    if !r.check_result("filtration is multiplicative", &check_multiplicative(a, w)) {
        return Ok(());
    }
    let aug = Augmentation::connected(a).map_err(|e| e.to_string())?;
    let b = build_bar(a, &aug, level).map_err(|e| e.to_string())?;
    let hopf = h0_hopf(&b).map_err(|e| e.to_string())?;
    let mut bw = bar_of_filtered(&b, w).map_err(|e| e.to_string())?;
    weight_on_h0(&b, &hopf, &mut bw);
    r.add("h0_weight_dims", dims_json(&bw.h0_weight_dims));
    let gr: std::collections::BTreeMap<(i64, i64), usize> =
        bw.h0_gr_dims.iter().map(|(&(s, w), &d)| ((s as i64, w), d)).collect();
    r.add("h0_gr_dims", bidims_json(&gr));
    r.check("convolution filtration descends to H^0(B)", true, "");
    if let Some(f) = bar_frobenius(bm)? {
        mfc_checks(a, &f, w, r);
    }
    Ok(())
}

fn cmd_monodromy(bm: &BuiltModel, depth: usize, level: usize, r: &mut Report) -> Result<(), String> {
    let ext = bm.theta.as_ref().ok_or_else(|| "model declares no theta generator".to_string())?;
    if !r.check_result("theta extension axioms", &ext.validate()) {
        return Ok(());
    }
    let cb = coboundary_compare(ext, depth).map_err(|e| e.to_string())?;
    r.check("u-route and coboundary route agree", cb.agree, "");
    for (&deg, (nu, _)) in &cb.by_degree {
        if !nu.is_zero() {
            r.add(&format!("n_on_h{deg}"), mat_json(nu));
        }
    }
    let qi = restriction_qi(ext, depth).map_err(|e| e.to_string())?;
    r.add("safe_range", json!(qi.safe_range));
    r.add("iso_degrees", json!(qi.iso_degrees));
    let expected: Vec<i64> = (0..=qi.safe_range).collect();
    r.check(
        "restriction is a quasi-isomorphism in the safe range",
        qi.iso_degrees == expected,
        format!("iso in degrees {:?}", qi.iso_degrees),
    );
    let frob = bar_frobenius(bm)?;
    let pi1 = pi1_with_structures(ext, frob.as_ref(), bm.weights.as_ref(), level, depth)
        .map_err(|e| e.to_string())?;
    r.add("lie_dims", json!(pi1.lie_dims));
    r.add("n_on_h0", mat_json(&pi1.n_on_h0));
    r.check("N is a Hopf derivation on H^0(B)", pi1.leibniz_ok && pi1.co_leibniz_ok, "");
    if let Some(ok) = pi1.frobenius_monodromy_ok {
        r.check("p Phi N = N Phi on H^0(B)", ok, "");
    }
    if let Some(ok) = pi1.n_lowers_weight_by_2 {
        r.check("N lowers the weight by 2", ok, "");
    }
    if let Some(ok) = pi1.phi_preserves_weights {
        r.check("Phi preserves the weight filtration", ok, "");
    }
    Ok(())
}

/// The `check` ledger for a built model, as a report: every applicable
/// validator, pass/fail, with witnesses in the detail field.
pub fn check_report(bm: &BuiltModel) -> Report {
    let mut r = Report::new(&bm.name, "check");
    cmd_check(bm, &mut r);
    r
}

fn cmd_check(bm: &BuiltModel, r: &mut Report) {
    if let Some(a) = &bm.algebra {
        let valid = r.check_result("cdga axioms", &a.validate());
        if valid {
            match cohomology(&a.complex()) {
                Ok(h) => r.add("h_dims", dims_json(&h.space.dims())),
                Err(e) => r.check("cohomology", false, e.to_string()),
            }
            let theta_ok = match &bm.theta {
                Some(t) => r.check_result("theta extension axioms", &t.validate()),
                None => false,
            };
            let frob_ok = match &bm.frobenius {
                Some(f) => r.check_result("frobenius is a chain map", &f.validate(a)),
                None => false,
            };
            // bar-side checks run on the base algebra
            match bar_algebra(bm) {
                Ok(base) if base.is_connected() => {
                    let bar_res = Augmentation::connected(base)
                        .map_err(|e| e.to_string())
                        .and_then(|aug| build_bar(base, &aug, 2).map_err(|e| e.to_string()))
                        .and_then(|b| {
                            let hopf = h0_hopf(&b).map_err(|e| e.to_string())?;
                            abelianization_check(&b, &hopf).map_err(|e| e.to_string())
                        });
                    match bar_res {
                        Ok(ab) => {
                            r.check(
                                "B_1 = 1 + dim H^1",
                                ab.b1_dim == 1 + ab.h1_dim,
                                format!("B_1 = {}, H^1 = {}", ab.b1_dim, ab.h1_dim),
                            );
                            r.check("level-1 classes are primitive", ab.level1_primitive, "");
                        }
                        Err(e) => r.check("bar construction", false, e),
                    }
                }
                _ => {}
            }
            if let Some(w) = &bm.weights {
                if let Ok(base) = bar_algebra(bm) {
                    let mult_ok = r.check_result(
                        "weight filtration is multiplicative",
                        &check_multiplicative(base, w),
                    );
                    // mixed structure: only meaningful with a working Frobenius
                    if mult_ok && frob_ok && bm.theta.is_none() {
                        if let Some(f) = &bm.frobenius {
                            mfc_checks(base, f, w, r);
                        }
                    }
                }
            }
            if theta_ok {
                let ext = bm.theta.as_ref().unwrap();
                match coboundary_compare(ext, 4) {
                    Ok(cb) => r.check("monodromy routes agree", cb.agree, ""),
                    Err(e) => r.check("monodromy routes agree", false, e.to_string()),
                }
                match restriction_qi(ext, 4) {
                    Ok(qi) => {
                        let expected: Vec<i64> = (0..=qi.safe_range).collect();
                        r.check(
                            "restriction is a quasi-isomorphism in the safe range",
                            qi.iso_degrees == expected,
                            format!("iso in degrees {:?}", qi.iso_degrees),
                        );
                    }
                    Err(e) => r.check("restriction quasi-isomorphism", false, e.to_string()),
                }
                if ext.base.d.is_zero() {
                    let frob = if frob_ok {
                        match bar_frobenius(bm) {
                            Ok(f) => f,
                            Err(e) => {
                                r.check("frobenius descends to the base", false, e);
                                None
                            }
                        }
                    } else {
                        None
                    };
                    match pi1_with_structures(ext, frob.as_ref(), bm.weights.as_ref(), 3, 4) {
                        Ok(pi1) => {
                            r.check(
                                "N is a Hopf derivation on H^0(B)",
                                pi1.leibniz_ok && pi1.co_leibniz_ok,
                                "",
                            );
                            if let Some(ok) = pi1.frobenius_monodromy_ok {
                                r.check("p Phi N = N Phi on H^0(B)", ok, "");
                            }
                            if let Some(ok) = pi1.n_lowers_weight_by_2 {
                                r.check("N lowers the weight by 2", ok, "");
                            }
                            if let Some(ok) = pi1.phi_preserves_weights {
                                r.check("Phi preserves the weight filtration", ok, "");
                            }
                        }
                        Err(e) => r.check("monodromy on H^0(B)", false, e.to_string()),
                    }
                }
            }
        }
    }
    if let Some(n) = &bm.nerve {
        if r.check_result("nerve squares commute", &n.check_squares()) {
            let tw_res = nerve_cdga(n, 2)
                .and_then(|g| {
                    g.validate()?;
                    let tw = thom_whitney(&g, 4)?;
                    let s = total_s(&g);
                    integration(&g, &tw, &s)?;
                    Ok(tw.h.space.dims())
                });
            match tw_res {
                Ok(dims) => {
                    r.add("nerve_h_dims", dims_json(&dims));
                    r.check("thom-whitney end and integration", true, "");
                }
                Err(e) => r.check("thom-whitney end and integration", false, e.to_string()),
            }
        }
    }
    if r.checks.is_empty() {
        r.check("model has checkable structure", false, "nothing to verify");
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Cohomology { .. } => "cohomology",
        Command::Bar { .. } => "bar",
        Command::Pi1 { .. } => "pi1",
        Command::EmSs { .. } => "em-ss",
        Command::Tw { .. } => "tw",
        Command::Nerve { .. } => "nerve",
        Command::Weights { .. } => "weights",
        Command::Monodromy { .. } => "monodromy",
        Command::Check { .. } => "check",
    }
}

fn finish(r: &Report, common: &Common) -> i32 {
    print!("{}", r.render_text());
    if let Some(path) = &common.json {
        let body = serde_json::to_string_pretty(&r.to_json()).expect("report serializes");
        if let Err(e) = std::fs::write(path, body) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return 2;
        }
    }
    if r.all_passed() {
        0
    } else {
        1
    }
}

fn load(path: &Path) -> Result<BuiltModel, String> {
    let mf = model::parse(path).map_err(|e| e.to_string())?;
    mf.build().map_err(|e| e.to_string())
}

/// Execute a parsed command line; returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let common = cli.command.common();
    let name = common
        .model
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| common.model.display().to_string());
    let mut r = Report::new(&name, command_name(&cli.command));
    let bm = match load(&common.model) {
        Ok(bm) => bm,
        Err(e) => {
            if matches!(cli.command, Command::Check { .. }) {
                r.check("model file builds", false, e);
                return finish(&r, common);
            }
            eprintln!("error: {e}");
            return 2;
        }
    };
    r.model = bm.name.clone();
    let res = match &cli.command {
        Command::Cohomology { .. } => cmd_cohomology(&bm, &mut r),
        Command::Bar { level, .. } => cmd_bar(&bm, *level, &mut r),
        Command::Pi1 { level, .. } => cmd_pi1(&bm, *level, &mut r),
        Command::EmSs { pages, .. } => cmd_em_ss(&bm, *pages, &mut r),
        Command::Tw { .. } => cmd_tw(&bm, &mut r),
        Command::Nerve { .. } => cmd_nerve(&bm, &mut r),
        Command::Weights { level, .. } => cmd_weights(&bm, *level, &mut r),
        Command::Monodromy { depth, level, .. } => cmd_monodromy(&bm, *depth, *level, &mut r),
        Command::Check { .. } => {
            cmd_check(&bm, &mut r);
            Ok(())
        }
    };
    if let Err(e) = res {
        eprintln!("error: {e}");
        return 2;
    }
    finish(&r, common)
}

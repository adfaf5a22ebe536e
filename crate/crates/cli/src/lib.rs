//! Configuration, verification suites and JSON reports behind the `deltaform`
//! command line tool.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use deltaform::characters::*;
use deltaform::crystalline::{
    catalog_curve, count_points_ap, crystalline_classes, crystalline_values, kedlaya_frobenius, CATALOG,
};
use deltaform::formal::{formal_log, WeierstrassCurve};
use deltaform::jet::JetRing;
use deltaform::serre_tate::{st_ftable, verify_catalog, StRing};
use deltaform::symbol::{gamma_report, sym_eval};
use deltaform::tower::{
    check_tau_relation, monomial_independence, n_of_pi, n_of_pi_bruteforce, n_pi_adic, FrobeniusFamily, KElem, Tower,
    TowerConfig, TowerElement,
};
use deltaform::words::{cocycle_weight, lambda_pow, nonempty_words_up_to, Word};

/// Version tag written into every report; see `docs/report-schema.md`.
pub const SCHEMA_VERSION: &str = "deltaform-report/1";

/// Seed used when neither the command line nor the config file sets one.
pub const DEFAULT_SEED: u64 = 2024;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad input, detected before any computation. Exit code 2.
    #[error("invalid configuration: {0}")]
    Validation(String),
    /// A computation that could not be completed. Exit code 1.
    #[error("computation failed: {0}")]
    Compute(#[from] deltaform::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn invalid<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Validation(e.to_string())
}

/// A curve given in a catalog file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveEntry {
    pub label: String,
    pub p: u64,
    pub a4: i64,
    pub a6: i64,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogFile {
    #[serde(default)]
    curve: Vec<CurveEntry>,
}

/// Read a TOML curve catalog: a list of `[[curve]]` tables with `label`, `p`, `a4`, `a6`.
pub fn read_catalog(path: &Path) -> CliResult<Vec<CurveEntry>> {
    let src = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read catalog {}: {e}", path.display())))?;
    let file: CatalogFile = toml::from_str(&src).map_err(invalid)?;
    Ok(file.curve)
}

/// Run parameters, read from a TOML file and overridden by command line flags.
/// Every field is optional; each suite supplies its own defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub tower: Option<TowerConfig>,
    /// Frobenius lifts `phi^(gamma_i)`, one per letter.
    pub gammas: Option<Vec<u64>>,
    /// Catalog label, `catalog#k`, or a label from the catalog file.
    pub curve: Option<String>,
    pub catalog: Option<PathBuf>,
    pub mu: Option<String>,
    pub nu: Option<String>,
    pub precision: Option<u32>,
    pub degree: Option<u32>,
    pub nmax: Option<usize>,
    pub seed: Option<u64>,
    /// `pi`, `pi^k`, `c*pi^k` or an integer.
    pub beta: Option<String>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(src: &str) -> CliResult<RunConfig> {
        toml::from_str(src).map_err(invalid)
    }

    pub fn load(path: &Path) -> CliResult<RunConfig> {
        let src = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        RunConfig::from_toml(&src)
    }

    /// Fields set in `other` replace those in `self`.
    pub fn merge(mut self, other: RunConfig) -> RunConfig {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(tower, gammas, curve, catalog, mu, nu, precision, degree, nmax, seed, beta, out);
        self
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    /// The configured tower, with `precision` overriding its `K`.
    fn tower_or(&self, default: TowerConfig) -> CliResult<(TowerConfig, Arc<Tower>)> {
        let mut cfg = self.tower.clone().unwrap_or(default);
        if let Some(k) = self.precision {
            cfg.k = k;
        }
        let t = cfg.build().map_err(invalid)?;
        Ok((cfg, t))
    }

    fn family(&self, t: &Arc<Tower>, default: &[u64]) -> CliResult<FrobeniusFamily> {
        let g = self.gammas.clone().unwrap_or_else(|| default.to_vec());
        FrobeniusFamily::new(t.clone(), g).map_err(invalid)
    }

    fn word(&self, which: &Option<String>, default: &str) -> CliResult<Word> {
        Word::parse(which.as_deref().unwrap_or(default)).map_err(invalid)
    }

    fn curve(&self, default: &str) -> CliResult<CurveEntry> {
        let name = self.curve.as_deref().unwrap_or(default);
        if let Some(path) = &self.catalog {
            if let Some(c) = read_catalog(path)?.into_iter().find(|c| c.label == name) {
                return Ok(c);
            }
        }
        let c = catalog_curve(name).map_err(invalid)?;
        Ok(CurveEntry { label: c.label.into(), p: c.p, a4: c.a4, a6: c.a6 })
    }

    /// A curve with good ordinary reduction.
    fn ordinary_curve(&self, default: &str) -> CliResult<CurveEntry> {
        let c = self.curve(default)?;
        let ap = count_points_ap(c.p, c.a4, c.a6).map_err(invalid)?;
        if ap.rem_euclid(c.p as i64) == 0 {
            return Err(CliError::Validation(format!("curve {} is supersingular at {}", c.label, c.p)));
        }
        Ok(c)
    }
}

/// Parse `pi`, `pi^k`, `c*pi^k`, `c*pi` or an integer `c` as a tower element.
pub fn parse_beta(t: &Tower, s: &str) -> CliResult<TowerElement> {
    let s = s.trim();
    let bad = || CliError::Validation(format!("cannot parse beta {s:?}"));
    let (coef, rest) = match s.split_once('*') {
        Some((c, r)) => (c.trim().parse::<i64>().map_err(|_| bad())?, r.trim()),
        None if s.starts_with("pi") => (1, s),
        None => return Ok(t.from_int(s.parse::<i64>().map_err(|_| bad())?)),
    };
    let k = match rest.strip_prefix("pi") {
        Some("") => 1,
        Some(e) => e.strip_prefix('^').and_then(|e| e.parse::<usize>().ok()).ok_or_else(bad)?,
        None => return Err(bad()),
    };
    Ok(t.mul(&t.from_int(coef), &t.pi_pow(k)))
}

/// One verified statement.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// What the check establishes.
    pub reference: String,
    pub details: Value,
}

fn check(name: impl Into<String>, passed: bool, reference: &str, details: Value) -> Check {
    Check { name: name.into(), passed, reference: reference.into(), details }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: String,
    pub parameters: Value,
    pub passed: bool,
    pub first_failure: Option<String>,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(command: &str, parameters: Value, checks: Vec<Check>) -> Report {
        let first_failure = checks.iter().find(|c| !c.passed).map(|c| c.name.clone());
        Report {
            schema: SCHEMA_VERSION,
            command: command.into(),
            parameters,
            passed: first_failure.is_none(),
            first_failure,
            checks,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize") + "\n"
    }
}

/// A suite with its resolved parameters, ready to run. Building one performs
/// all validation.
pub struct Prepared {
    pub name: &'static str,
    pub parameters: Value,
    job: Box<dyn FnOnce() -> CliResult<Vec<Check>> + Send>,
}

impl Prepared {
    pub fn run(self) -> CliResult<Report> {
        let checks = (self.job)()?;
        Ok(Report::new(self.name, self.parameters, checks))
    }
}

/// Suites accepted by `verify`. The last three cover the jet, operator and
/// `N(pi)` checks that the acceptance run also needs.
pub const SUITES: &[&str] =
    &["st-identities", "asd", "gamma", "pairing", "gm", "strassman", "crystalline", "jets", "serre-operators", "n-pi"];

pub fn prepare(suite: &str, cfg: &RunConfig) -> CliResult<Prepared> {
    match suite {
        "st-identities" => Ok(prepared("st-identities", json!({}), st_identities)),
        "asd" => prepare_asd(cfg),
        "gamma" => prepare_gamma(cfg),
        "pairing" => prepare_pairing(cfg),
        "gm" => prepare_gm(cfg),
        "strassman" => prepare_strassman(cfg),
        "crystalline" => prepare_crystalline(cfg),
        "jets" => prepare_jets(cfg),
        "serre-operators" => prepare_serre(cfg),
        "n-pi" => Ok(prepared("n-pi", json!({}), n_pi_suite)),
        "tower-info" => prepare_tower_info(cfg),
        other => Err(CliError::Validation(format!("unknown suite {other:?}; expected one of {}", SUITES.join(", ")))),
    }
}

fn prepared<F>(name: &'static str, parameters: Value, f: F) -> Prepared
where
    F: FnOnce() -> CliResult<Vec<Check>> + Send + 'static,
{
    Prepared { name, parameters, job: Box::new(f) }
}

/// Run several prepared suites concurrently; reports keep the input order.
pub fn run_all(jobs: Vec<Prepared>) -> Vec<CliResult<Report>> {
    std::thread::scope(|s| {
        let handles: Vec<_> = jobs.into_iter().map(|j| s.spawn(move || j.run())).collect();
        handles.into_iter().map(|h| h.join().expect("suite thread panicked")).collect()
    })
}

fn kf(t: &Tower, x: &KElem) -> String {
    t.k_format(x)
}

fn k_val_at_least(t: &Tower, x: &KElem, k: i64) -> bool {
    t.k_valuation(x).at_least(num_rational::Ratio::from_integer(k))
}

// ---- tower-info ----

fn prepare_tower_info(cfg: &RunConfig) -> CliResult<Prepared> {
    let (tc, t) = cfg.tower_or(TowerConfig { p: 7, l: 2, m: 1, f: None, k: 8 })?;
    let fam = cfg.family(&t, &[0, 1])?;
    let r = cfg.degree.unwrap_or(3) as usize;
    let params = json!({ "tower": tc, "gammas": fam.gammas, "r": r });
    Ok(prepared("tower-info", params, move || tower_info(&fam, r)))
}

fn tower_info(fam: &FrobeniusFamily, r: usize) -> CliResult<Vec<Check>> {
    let t = fam.tower.as_ref();
    let (p, e) = (t.p(), t.e() as u64);
    let n = t.n_of_pi();
    let brute = n_of_pi_bruteforce(p, e, p.pow(6));
    let (n_pi, minimisers) = n_pi_adic(p, e);
    let mut checks = vec![check(
        "pi minimal polynomial",
        t.eq(&t.pow(&t.pi(), e), &t.from_int(p as i64)),
        "pi is a root of x^e - p",
        json!({ "polynomial": format!("x^{e} - {p}"), "e": e, "f": t.f(), "dimension": t.dim() }),
    )];
    checks.push(check(
        "N(pi)",
        n == brute,
        "N(pi) = min N with v_p(pi^n / n) >= -N, formula against a scan of n <= p^6",
        json!({ "formula": n, "brute_force": brute, "pi_adic": n_pi, "pi_adic_minimising_exponents": minimisers }),
    ));
    let mut table = Vec::new();
    let mut tau_ok = true;
    for (i, &g) in fam.gammas.iter().enumerate() {
        table.push(json!({
            "letter": i + 1,
            "gamma": g,
            "phi(pi)": t.format(&t.phi(g, &t.pi())),
            "phi(zeta)": t.format(&t.phi(g, &t.zeta())),
        }));
        tau_ok &= check_tau_relation(t, g);
    }
    checks.push(check(
        "Frobenius table",
        tau_ok,
        "phi^(gamma) tau = tau^p phi^(gamma) on pi, zeta and W_f",
        json!({ "zeta": t.format(&t.zeta()), "lifts": table }),
    ));
    let ind = monomial_independence(&fam.gammas, p, r, Some(t))?;
    checks.push(check(
        "monomial independence",
        ind.independent,
        "distinct words give distinct automorphisms of the tower",
        serde_json::to_value(&ind).expect("serializable"),
    ));
    Ok(checks)
}

// ---- st-identities ----

fn st_identities() -> CliResult<Vec<Check>> {
    let reports = verify_catalog()?;
    let mut checks = vec![check(
        "catalog size",
        reports.len() == 14,
        "the relation catalog has 14 entries",
        json!({ "relations": reports.len() }),
    )];
    for r in reports {
        checks.push(check(
            r.relation.clone(),
            r.passed(),
            "relation reduces to the zero polynomial with c and p as indeterminates",
            serde_json::to_value(&r).expect("serializable"),
        ));
    }
    Ok(checks)
}

// ---- asd ----

fn prepare_asd(cfg: &RunConfig) -> CliResult<Prepared> {
    let curve = cfg.ordinary_curve("catalog#1")?;
    let mu = cfg.word(&cfg.mu, "11")?;
    let nu = cfg.word(&cfg.nu, "1")?;
    let nmax = cfg.nmax.unwrap_or(40);
    let k = cfg.precision.unwrap_or(10);
    if mu == nu || mu.is_empty() || nu.is_empty() {
        return Err(CliError::Validation("mu and nu must be distinct nonempty words".into()));
    }
    if mu.len() < nu.len() {
        return Err(CliError::Validation("the ASD check needs |mu| >= |nu|".into()));
    }
    if nmax == 0 {
        return Err(CliError::Validation("nmax must be positive".into()));
    }
    let t = Tower::new(curve.p, 2, 0, 1, k).map_err(invalid)?;
    WeierstrassCurve::from_ints(&t, curve.a4, curve.a6).map_err(invalid)?;
    let params = json!({ "curve": curve, "mu": mu.to_string(), "nu": nu.to_string(), "nmax": nmax, "precision": k });
    Ok(prepared("asd", params, move || asd_suite(&t, &curve, &mu, &nu, nmax)))
}

fn asd_suite(t: &Arc<Tower>, c: &CurveEntry, mu: &Word, nu: &Word, nmax: usize) -> CliResult<Vec<Check>> {
    let n = mu.letters().iter().chain(nu.letters()).copied().max().unwrap_or(1) as usize;
    let d = kedlaya_frobenius(c.p, c.a4, c.a6, t.precision())?;
    let f = crystalline_classes(t, &d, n, mu.len())?;
    let vals = AsdValues {
        ftilde_mu: f.tilde(&mu.to_string())?.clone(),
        ftilde_nu: f.tilde(&nu.to_string())?.clone(),
        f_mu_nu: f.pair(&mu.to_string(), &nu.to_string())?.clone(),
    };
    let curve = WeierstrassCurve::from_ints(t, c.a4, c.a6)?;
    let log = formal_log(t, &curve, (c.p as usize).pow(mu.len() as u32) * nmax)?;
    let fam = FrobeniusFamily::new(t.clone(), vec![0; n])?;
    let rep = asd_check(&fam, &log, &vals, mu, nu, nmax)?;
    const REF: &str = "ASD congruence: the N-th coefficient of p psi_{mu,nu} has valuation >= 1";
    let mut checks: Vec<Check> = rep
        .lines
        .iter()
        .map(|l| check(format!("N={}", l.n), l.pass, REF, serde_json::to_value(l).expect("serializable")))
        .collect();
    if t.k_is_zero(&vals.ftilde_mu) {
        checks.push(check(
            "mutation",
            true,
            "skipped: f~_mu vanishes (canonical lift)",
            json!({ "ftilde_mu": kf(t, &vals.ftilde_mu) }),
        ));
    } else {
        let bad = AsdValues { ftilde_mu: t.k_add(&vals.ftilde_mu, &t.k_int(1)), ..vals.clone() };
        let mrep = asd_check(&fam, &log, &bad, mu, nu, nmax)?;
        let fails = mrep.lines.iter().filter(|l| !l.pass).count();
        checks.push(check(
            "mutation",
            fails > 0,
            "adding 1 to f~_mu breaks at least one congruence",
            json!({ "failing_lines": fails }),
        ));
    }
    Ok(checks)
}

// ---- gamma ----

fn prepare_gamma(cfg: &RunConfig) -> CliResult<Prepared> {
    let (tc, t) = cfg.tower_or(TowerConfig { p: 7, l: 2, m: 2, f: Some(2), k: 12 })?;
    let fam = cfg.family(&t, &[0, 1])?;
    if fam.gammas.len() != 2 {
        return Err(CliError::Validation("the Gamma matrix needs exactly two lifts".into()));
    }
    let beta_s = cfg.beta.clone().unwrap_or_else(|| "pi".into());
    let beta = t.k_from(&parse_beta(&t, &beta_s)?);
    deltaform::serre_tate::check_beta(&t, &beta).map_err(invalid)?;
    let level = t.precision().checked_sub(4).filter(|&l| l > 0).ok_or_else(|| invalid("precision must exceed 4"))?;
    let params = json!({ "tower": tc, "gammas": fam.gammas, "beta": beta_s, "minor_precision": level });
    Ok(prepared("gamma", params, move || {
        let tab = st_ftable(&fam, &beta, 2)?;
        let rep = gamma_report(&fam, &tab, level)?;
        let d = serde_json::to_value(&rep).expect("serializable");
        Ok(vec![
            check(
                "explicit formula",
                rep.matches_explicit_formula,
                "Gamma built from symbols agrees with the explicit matrix",
                json!({}),
            ),
            check(
                "6x6 minors",
                rep.all_six_minors_vanish,
                "every 6x6 minor of Gamma vanishes to the working precision",
                json!({ "valuations": d["six_minor_valuations"], "precision": level }),
            ),
            check(
                "upper left 5x5 minor",
                rep.upper_left_five_minor_nonzero,
                "the upper left 5x5 minor has finite valuation",
                json!({ "valuation": d["upper_left_five_minor_valuation"] }),
            ),
        ])
    }))
}

// ---- pairing ----

fn prepare_pairing(cfg: &RunConfig) -> CliResult<Prepared> {
    let (tc, t) = cfg.tower_or(TowerConfig { p: 5, l: 2, m: 2, f: Some(1), k: 10 })?;
    let fam = cfg.family(&t, &[0, 1])?;
    if fam.gammas.len() < 2 {
        return Err(CliError::Validation("the pairing suite needs two lifts".into()));
    }
    // pi_1 = pi^(e/l) is the default beta.
    let pi1 = format!("pi^{}", t.e() as u64 / tc.l);
    let beta_s = cfg.beta.clone().unwrap_or(pi1);
    let beta = parse_beta(&t, &beta_s)?;
    let pairs: Vec<(Word, Word)> = match (&cfg.mu, &cfg.nu) {
        (Some(_), Some(_)) => vec![(cfg.word(&cfg.mu, "")?, cfg.word(&cfg.nu, "")?)],
        (None, None) => [("11", "1"), ("1", "2"), ("12", "21"), ("2", "22")]
            .iter()
            .map(|(a, b)| (Word::parse(a).unwrap(), Word::parse(b).unwrap()))
            .collect(),
        _ => return Err(CliError::Validation("give both mu and nu or neither".into())),
    };
    for (mu, nu) in &pairs {
        PairingContext::new(fam.clone(), mu.clone(), nu.clone()).map_err(invalid)?;
    }
    let seed = cfg.seed();
    let params = json!({ "tower": tc, "gammas": fam.gammas, "beta": beta_s, "seed": seed,
        "pairs": pairs.iter().map(|(a, b)| format!("({a},{b})")).collect::<Vec<_>>() });
    Ok(prepared("pairing", params, move || pairing_suite(&fam, &beta, &pairs, seed)))
}

fn pairing_suite(
    fam: &FrobeniusFamily,
    beta: &TowerElement,
    pairs: &[(Word, Word)],
    seed: u64,
) -> CliResult<Vec<Check>> {
    let t = fam.tower.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    for (mu, nu) in pairs {
        let ctx = PairingContext::new(fam.clone(), mu.clone(), nu.clone())?;
        let mut ok = true;
        for _ in 0..10 {
            let a = t.random_element(&mut rng);
            let b = t.random_element(&mut rng);
            let ab = pairing(&ctx, &a, &b)?;
            ok &= t.is_zero(&pairing(&ctx, &a, &a)?);
            ok &= t.eq(&ab, &t.neg(&pairing(&ctx, &b, &a)?));
            ok &= t.eq(&ab, &t.neg(&pairing(&ctx.swapped(), &a, &b)?));
        }
        checks.push(check(
            format!("antisymmetry ({mu},{nu})"),
            ok,
            "<a,a> = 0, <a,b> = -<b,a> and swapping mu, nu negates",
            json!({ "samples": 10 }),
        ));
    }
    let n = fam.gammas.len();
    for mu in nonempty_words_up_to(n, 2).into_iter().filter(|w| w.len() == 2) {
        for nu in nonempty_words_up_to(n, 2).into_iter().filter(|w| w.len() == 2 && *w > mu) {
            let ctx = PairingContext::new(fam.clone(), mu.clone(), nu.clone())?;
            let rep = kernel_dimension(&ctx, beta)?;
            let details = serde_json::to_value(&rep).expect("serializable");
            if t.eq(&fam.phi_word(&mu, beta)?, &fam.phi_word(&nu, beta)?) {
                // Both lifts fix beta up to the same factor, so constants pair to zero too.
                checks.push(check(
                    format!("kernel ({mu},{nu})"),
                    rep.dimension > 1,
                    "lifts agreeing on beta leave a kernel larger than the line through beta",
                    details,
                ));
                continue;
            }
            // Length-two words act on W_f through phi^2, whose fixed field has degree gcd(2, f).
            let expected = if t.f().is_multiple_of(2) { 2 } else { 1 };
            let ok = rep.dimension == expected
                && (expected > 1 || proportional(&rep.witnesses[0], beta.coeffs(), t.p(), rep.precision));
            checks.push(check(
                format!("kernel ({mu},{nu})"),
                ok,
                "the kernel of alpha -> <alpha, beta> is (W_f fixed by phi^2) beta",
                details,
            ));
        }
    }
    // Equal lifts and beta in p Z_p: the pairing vanishes identically.
    let same = FrobeniusFamily::new(t.clone(), vec![fam.gammas[0]; 2])?;
    let p = t.p() as i64;
    for (mu, nu) in [("1", "2"), ("12", "21"), ("11", "22")] {
        let ctx = PairingContext::new(same.clone(), Word::parse(mu)?, Word::parse(nu)?)?;
        let mut dims = Vec::new();
        for b in [t.from_int(3 * p), t.from_int(p * p), t.zero()] {
            dims.push(kernel_dimension(&ctx, &b)?.dimension);
        }
        checks.push(check(
            format!("kernel with equal lifts ({mu},{nu})"),
            dims.iter().all(|&d| d == t.dim()),
            "for equal lifts and beta in p Z_p the kernel is everything",
            json!({ "dimensions": dims, "qp_dimension": t.dim() }),
        ));
    }
    // Reciprocity on random pairs small enough for the Serre-Tate values.
    let j = t.e() / (t.p() as usize - 1) + 1;
    let small = t.pi_pow(j);
    let mut fails = Vec::new();
    for k in 0..50 {
        let (mu, nu) = &pairs[k % pairs.len()];
        let ctx = PairingContext::new(fam.clone(), mu.clone(), nu.clone())?;
        let a = t.mul(&small, &t.random_element(&mut rng));
        let b = t.mul(&small, &t.random_element(&mut rng));
        let rep = reciprocity_check(&ctx, &a, &b)?;
        let diag = reciprocity_check(&ctx, &a, &a)?;
        if !(rep.holds && rep.matches_pairing && diag.holds && diag.matches_pairing) {
            fails.push(k);
        }
    }
    checks.push(check(
        "reciprocity",
        fails.is_empty(),
        "theta(psi_{mu,nu,beta})(alpha) = theta(psi_{nu,mu,alpha})(beta), and the character of P_{a,a} vanishes",
        json!({ "samples": 50, "failures": fails }),
    ));
    Ok(checks)
}

// ---- gm ----

fn prepare_gm(cfg: &RunConfig) -> CliResult<Prepared> {
    let (tc, t) = cfg.tower_or(TowerConfig { p: 7, l: 2, m: 2, f: Some(2), k: 12 })?;
    let fam = cfg.family(&t, &[0, 1])?;
    let seed = cfg.seed();
    let params = json!({ "tower": tc, "gammas": fam.gammas, "seed": seed });
    Ok(prepared("gm", params, move || gm_suite(&fam, seed)))
}

fn gm_suite(fam: &FrobeniusFamily, seed: u64) -> CliResult<Vec<Check>> {
    let t = fam.tower.clone();
    let n = fam.gammas.len() as u8;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    let mut defects = 0;
    for _ in 0..100 {
        let x = t.random_unit(&mut rng);
        let y = t.random_unit(&mut rng);
        for i in 1..=n {
            let lhs = gm_character_eval(fam, i, &t.mul(&x, &y))?;
            let rhs = t.k_add(&gm_character_eval(fam, i, &x)?, &gm_character_eval(fam, i, &y)?);
            defects += usize::from(!t.k_is_zero(&t.k_sub(&lhs, &rhs)));
        }
    }
    checks.push(check(
        "homomorphism",
        defects == 0,
        "psi_i(xy) = psi_i(x) + psi_i(y) on random units",
        json!({ "pairs": 100, "defects": defects, "precision": t.precision() }),
    ));
    let mut torsion = t.teichmuller_units();
    torsion.extend((0..t.e() as u64).map(|j| t.zeta_pow(j)));
    torsion.push(t.from_int(-1));
    let mut nonzero = 0;
    for i in 1..=n {
        for v in gm_character_batch(fam, i, &torsion) {
            nonzero += usize::from(!t.k_is_zero(&v?));
        }
    }
    checks.push(check(
        "torsion",
        nonzero == 0,
        "psi_i vanishes on Teichmueller units and roots of unity of the tower",
        json!({ "points": torsion.len(), "nonzero": nonzero }),
    ));
    let mut mismatches = 0;
    for _ in 0..20 {
        let x = t.add(&t.one(), &t.random_nonunit(&mut rng));
        let l = log_principal_unit(&t, &x)?;
        for i in 1..=n {
            let via = t.k_mul_p_pow(&sym_eval(fam, &gm_symbol(fam, i), &l)?, -1);
            let direct = gm_character_eval(fam, i, &x)?;
            mismatches += usize::from(!t.k_is_zero(&t.k_sub(&via, &direct)));
        }
    }
    checks.push(check(
        "symbol",
        mismatches == 0,
        "psi_i(x) = p^{-1} p^{N+1}(phi_i - p) applied to log x",
        json!({ "samples": 20, "mismatches": mismatches }),
    ));
    Ok(checks)
}

// ---- strassman ----

fn prepare_strassman(cfg: &RunConfig) -> CliResult<Prepared> {
    let seed = cfg.seed();
    let k = cfg.precision.unwrap_or(8);
    if k < 4 {
        return Err(CliError::Validation("strassman needs precision >= 4".into()));
    }
    Ok(prepared("strassman", json!({ "seed": seed, "precision": k }), move || strassman_suite(seed, k)))
}

fn strassman_suite(seed: u64, k: u32) -> CliResult<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let linear = |p: u64, a: i64| RestrictedSeries::from_ints(p, k, &[-a, 1]);
    let mut checks = Vec::new();
    for case in 0..20 {
        let p = [5u64, 7, 11][case % 3];
        let nroots = 1 + case % 3;
        let mut roots: Vec<i64> = Vec::new();
        while roots.len() < nroots {
            let a: i64 = rng.gen_range(0..(p as i64).pow(3));
            if roots.iter().all(|&b| (a - b) % p as i64 != 0) {
                roots.push(a);
            }
        }
        let mut s = RestrictedSeries::from_ints(p, k, &[1])?;
        for &a in &roots {
            s = s.mul(&linear(p, a)?);
        }
        let g: Vec<i64> = (0..4).map(|j| if j == 0 { 1 } else { p as i64 * rng.gen_range(0..50) }).collect();
        s = s.mul(&RestrictedSeries::from_ints(p, k, &g)?);
        let split = case % 4 != 3;
        if !split {
            s = s.mul(&RestrictedSeries::from_ints(p, k, &[-(p as i64), 0, 1])?);
        }
        let r = strassman_count(&s)?;
        let m = p.pow(r.root_precision);
        let mut want: Vec<u64> = roots.iter().map(|&a| a as u64 % m).collect();
        want.sort_unstable();
        let ok =
            r.roots.len() <= r.bound && r.unresolved == 0 && r.roots == want && (!split || r.roots.len() == r.bound);
        checks.push(check(
            format!("series {case}"),
            ok,
            "number of roots in Z_p <= Strassman bound, with equality when the series splits",
            json!({ "p": p, "split": split, "planted": want, "report": r }),
        ));
    }
    Ok(checks)
}

// ---- crystalline ----

fn prepare_crystalline(cfg: &RunConfig) -> CliResult<Prepared> {
    let k = cfg.precision.unwrap_or(10);
    if k < 4 {
        return Err(CliError::Validation("crystalline needs precision >= 4".into()));
    }
    let curves: Vec<CurveEntry> = match &cfg.curve {
        Some(_) => vec![cfg.ordinary_curve("")?],
        None => CATALOG
            .iter()
            .filter(|c| !c.label.ends_with("ss"))
            .map(|c| CurveEntry { label: c.label.into(), p: c.p, a4: c.a4, a6: c.a6 })
            .collect(),
    };
    for c in &curves {
        let t = Tower::new(c.p, 2, 0, 1, k).map_err(invalid)?;
        WeierstrassCurve::from_ints(&t, c.a4, c.a6).map_err(invalid)?;
    }
    let params = json!({ "curves": curves, "precision": k });
    Ok(prepared("crystalline", params, move || {
        let mut checks = Vec::new();
        for c in &curves {
            checks.extend(crystalline_curve(c, k)?);
        }
        Ok(checks)
    }))
}

fn crystalline_curve(c: &CurveEntry, k: u32) -> CliResult<Vec<Check>> {
    let t = Tower::new(c.p, 2, 0, 1, k)?;
    let d = kedlaya_frobenius(c.p, c.a4, c.a6, k)?;
    let ap = count_points_ap(c.p, c.a4, c.a6)?;
    let l = &c.label;
    let level = k as i64 - 2;
    let mut checks = vec![
        check(
            format!("{l}: trace"),
            d.trace_matches_ap() && d.ap == ap,
            "trace of Frobenius on H^1_dR equals a_p from point counting",
            json!({ "ap": ap, "frobenius": d.frob }),
        ),
        check(format!("{l}: det"), d.det_is_p(), "det of Frobenius equals p", json!({})),
    ];
    let f = crystalline_classes(&t, &d, 1, 2)?;
    let f1 = f.tilde("1")?;
    let r1 = t.k_sub(f.tilde("11")?, &t.k_mul(&t.k_int(d.ap), f1));
    let r2 = t.k_sub(f.pair("11", "1")?, &t.k_mul_p_pow(f1, 1));
    checks.push(check(
        format!("{l}: f_ii = a_p f_i"),
        k_val_at_least(&t, &r1, level),
        "f_ii = a_p f_i modulo p^(K-2)",
        json!({ "residual": kf(&t, &r1) }),
    ));
    checks.push(check(
        format!("{l}: f_ii,i = p f_i"),
        k_val_at_least(&t, &r2, level),
        "f_{ii,i} = p f_i modulo p^(K-2)",
        json!({ "residual": kf(&t, &r2) }),
    ));
    if c.a6 == 0 && c.a4 == 1 && c.p % 4 == 1 {
        let v = crystalline_values(&t, &d, 1)?;
        checks.push(check(
            format!("{l}: canonical lift"),
            k_val_at_least(&t, &v.f[1], level),
            "y^2 = x^3 + x is a canonical lift, so f_i = 0 modulo p^(K-2)",
            json!({ "f_1": kf(&t, &v.f[1]) }),
        ));
    }
    Ok(checks)
}

// ---- jets ----

fn prepare_jets(cfg: &RunConfig) -> CliResult<Prepared> {
    let (tc, t) = cfg.tower_or(TowerConfig { p: 3, l: 2, m: 1, f: Some(1), k: 12 })?;
    let fam = cfg.family(&t, &[0, 1])?;
    let d = cfg.degree.unwrap_or(9);
    let seed = cfg.seed();
    let jr = JetRing::new(fam, 2, d).map_err(invalid)?;
    let params = json!({ "tower": tc, "gammas": jr.fam.gammas, "degree": d, "seed": seed });
    Ok(prepared("jets", params, move || jets_suite(&jr, seed)))
}

fn jets_suite(jr: &JetRing, seed: u64) -> CliResult<Vec<Check>> {
    let fam = &jr.fam;
    let t = fam.tower.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    for mu in nonempty_words_up_to(jr.fam.gammas.len(), jr.r) {
        let top = jr.var_index(&mu)?;
        let pw = lambda_pow(fam, &t.pi(), &cocycle_weight(&mu)?)?;
        let phi_t = jr.phi_word(&mu, &jr.t())?;
        let res = phi_t.sub(&jr.delta_var(&mu)?.scale(&t.k_from(&pw), t.as_ref()), t.as_ref());
        let mut bad = 0;
        for _ in 0..30 {
            let a = t.random_nonunit(&mut rng);
            let jets = jr.jet_of_point(&a)?;
            let phi_a = fam.phi_word(&mu, &a)?;
            let direct = t.sub(&phi_a, &t.mul(&pw, &fam.delta_word(&mu, &a)?));
            let mut moved = jets.clone();
            moved[top] = t.random_element(&mut rng);
            let ok = t.k_is_zero(&t.k_sub(&jr.eval_at(&phi_t, &jets), &t.k_from(&phi_a)))
                && t.k_is_zero(&t.k_sub(&jr.eval_at(&res, &moved), &t.k_from(&direct)));
            bad += usize::from(!ok);
        }
        checks.push(check(
            format!("remainder {mu}"),
            !res.involves(top) && bad == 0,
            "phi_mu(T) - pi^{w(mu)} delta_mu T only involves jets of lower order",
            json!({ "points": 30, "failures": bad }),
        ));
    }
    let ind = monomial_independence(&[0, 1], 7, 3, None)?;
    checks.push(check(
        "independence of [0,1] at r = 3",
        ind.independent,
        "phi^(0), phi^(1) are monomially independent up to length 3",
        json!({ "words": ind.actions.len(), "collisions": ind.collisions }),
    ));
    let t7 = Tower::new(7, 2, 2, 2, 8)?;
    let p = t7.p();
    let mut ok = true;
    for g in 0..4 {
        for x in [t7.pi(), t7.zeta()] {
            ok &= t7.eq(&t7.phi(g, &t7.tau_pow(1, &x)), &t7.tau_pow(p, &t7.phi(g, &x)));
        }
    }
    checks.push(check(
        "tau relation",
        ok,
        "phi tau = tau^p phi on pi and zeta",
        json!({ "tower": "p = 7, l = 2, m = 2" }),
    ));
    Ok(checks)
}

// ---- serre-operators ----

fn prepare_serre(cfg: &RunConfig) -> CliResult<Prepared> {
    let d = cfg.degree.unwrap_or(30);
    if d < 2 {
        return Err(CliError::Validation("degree must be at least 2".into()));
    }
    Ok(prepared("serre-operators", json!({ "p": 5, "degree": d }), move || {
        let st = StRing::new(5, 2, 1, d + 1)?;
        let one = st.constant(num_rational::BigRational::from_integer(1.into()));
        let mut checks = Vec::new();
        for i in 1..=2u8 {
            let psi = st.psi(i)?;
            for j in 1..=2u8 {
                let dj = st.serre_operator(&Word::letter(j), &psi)?.truncate(d);
                let expect = if i == j { one.clone() } else { st.zero() };
                checks.push(check(
                    format!("d_{j} Psi_{i}"),
                    dj.sub(&expect, &()).is_zero(&()),
                    "the canonical Serre operators are dual to the Psi_i",
                    json!({ "expected": i32::from(i == j), "degree": d }),
                ));
            }
        }
        Ok(checks)
    }))
}

// ---- n-pi ----

fn n_pi_suite() -> CliResult<Vec<Check>> {
    let matrix = [
        (3u64, 1u64),
        (3, 2),
        (5, 1),
        (5, 2),
        (5, 4),
        (7, 1),
        (7, 2),
        (7, 4),
        (7, 3),
        (11, 2),
        (13, 4),
        (3, 8),
        (5, 8),
    ];
    let mut checks = Vec::new();
    for (p, e) in matrix {
        let n = n_of_pi(p, e);
        let b = n_of_pi_bruteforce(p, e, p.pow(6));
        let ok = n == b && (e != 1 || n == -1);
        checks.push(check(
            format!("p = {p}, e = {e}"),
            ok,
            "closed formula for N(pi) against a scan over n <= p^6",
            json!({ "formula": n, "brute_force": b }),
        ));
    }
    Ok(checks)
}

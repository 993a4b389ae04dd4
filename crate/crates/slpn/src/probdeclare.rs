//! Probabilistic Declare: constraint templates compiled to DFAs, a text
//! format for specifications, and stochastic compliance checking by
//! iterated specification probability.

use std::collections::BTreeSet;

use crate::analysis::{language_mass_with, spec_probability_with, AnalysisOptions};
use crate::automata::{parse_dfa, Dfa, DfaBuilder};
use crate::error::{Error, Result};
use crate::net::{parse_weight, tokenize, Label, Lsp};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Le,
    Ge,
    Lt,
    Gt,
}

impl CmpOp {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(match text {
            "=" => CmpOp::Eq,
            "!=" => CmpOp::Ne,
            "<=" => CmpOp::Le,
            ">=" => CmpOp::Ge,
            "<" => CmpOp::Lt,
            ">" => CmpOp::Gt,
            other => return Err(Error::Parse(format!("unknown operator `{other}`"))),
        })
    }

    pub fn symbol(&self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
        }
    }

    /// Equality comparisons carry a tolerance of 1e-9; strict inequalities
    /// are evaluated exactly on the floating value.
    pub fn holds(&self, computed: f64, threshold: f64) -> bool {
        const TOL: f64 = 1e-9;
        match self {
            CmpOp::Eq => (computed - threshold).abs() <= TOL,
            CmpOp::Ne => (computed - threshold).abs() > TOL,
            CmpOp::Le => computed <= threshold + TOL,
            CmpOp::Ge => computed >= threshold - TOL,
            CmpOp::Lt => computed < threshold,
            CmpOp::Gt => computed > threshold,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProbabilisticConstraint {
    pub name: String,
    pub formula: Dfa,
    pub operator: CmpOp,
    pub probability: f64,
    /// Human-readable origin: template call or dfa file path.
    pub source: String,
}

#[derive(Debug, Clone)]
pub struct ProbDeclareSpec {
    pub alphabet: BTreeSet<Label>,
    pub constraints: Vec<ProbabilisticConstraint>,
}

/// Compiles a template instance over the full alphabet. Supported:
/// existence(a), absence(a), response(a,b), precedence(a,b),
/// not-coexistence(a,b), coexistence(a,b), eventually-then(a,b).
pub fn template_to_dfa(
    template: &str,
    args: &[Label],
    alphabet: &BTreeSet<Label>,
) -> Result<Dfa> {
    for arg in args {
        if !alphabet.contains(arg) {
            return Err(Error::Parse(format!("argument `{arg}` not in the alphabet")));
        }
    }
    let arity = |n: usize| -> Result<()> {
        if args.len() != n {
            return Err(Error::Parse(format!(
                "template `{template}` expects {n} argument(s), got {}",
                args.len()
            )));
        }
        Ok(())
    };
    let mut b = DfaBuilder::new(alphabet.iter().cloned())?;
    match template {
        "existence" => {
            arity(1)?;
            let s0 = b.add_state("s0")?;
            let s1 = b.add_state("s1")?;
            b.set_initial(s0)?;
            b.set_accepting(s1);
            b.add_trans(s0, args[0].clone(), s1)?;
            b.add_wildcard(s0, s0)?;
            b.add_wildcard(s1, s1)?;
        }
        "absence" => {
            arity(1)?;
            let s0 = b.add_state("s0")?;
            b.set_initial(s0)?;
            b.set_accepting(s0);
            // the argument has no transition: observing it rejects
            for l in alphabet {
                if l != &args[0] {
                    b.add_trans(s0, l.clone(), s0)?;
                }
            }
        }
        "response" => {
            arity(2)?;
            let (a, bb) = (&args[0], &args[1]);
            let s0 = b.add_state("s0")?;
            let s1 = b.add_state("s1")?;
            b.set_initial(s0)?;
            b.set_accepting(s0);
            b.add_trans(s0, a.clone(), s1)?;
            b.add_wildcard(s0, s0)?;
            if a != bb {
                b.add_trans(s1, bb.clone(), s0)?;
            }
            b.add_wildcard(s1, s1)?;
        }
        "precedence" => {
            arity(2)?;
            let (a, bb) = (&args[0], &args[1]);
            let s0 = b.add_state("s0")?;
            let s1 = b.add_state("s1")?;
            b.set_initial(s0)?;
            b.set_accepting(s0);
            b.set_accepting(s1);
            b.add_trans(s0, a.clone(), s1)?;
            // b before any a rejects (no transition), unless a and b coincide
            for l in alphabet {
                if l != a && l != bb {
                    b.add_trans(s0, l.clone(), s0)?;
                }
            }
            b.add_wildcard(s1, s1)?;
        }
        "not-coexistence" => {
            arity(2)?;
            let (a, bb) = (&args[0], &args[1]);
            if a == bb {
                return Err(Error::Parse(
                    "not-coexistence needs two distinct activities".into(),
                ));
            }
            let s0 = b.add_state("s0")?;
            let sa = b.add_state("sa")?;
            let sb = b.add_state("sb")?;
            b.set_initial(s0)?;
            b.set_accepting(s0);
            b.set_accepting(sa);
            b.set_accepting(sb);
            b.add_trans(s0, a.clone(), sa)?;
            b.add_trans(s0, bb.clone(), sb)?;
            b.add_wildcard(s0, s0)?;
            for l in alphabet {
                if l != bb {
                    b.add_trans(sa, l.clone(), sa)?;
                }
                if l != a {
                    b.add_trans(sb, l.clone(), sb)?;
                }
            }
        }
        "coexistence" => {
            arity(2)?;
            let (a, bb) = (&args[0], &args[1]);
            if a == bb {
                return Err(Error::Parse("coexistence needs two distinct activities".into()));
            }
            let s0 = b.add_state("s0")?;
            let sa = b.add_state("sa")?;
            let sb = b.add_state("sb")?;
            let sab = b.add_state("sab")?;
            b.set_initial(s0)?;
            b.set_accepting(s0);
            b.set_accepting(sab);
            b.add_trans(s0, a.clone(), sa)?;
            b.add_trans(s0, bb.clone(), sb)?;
            b.add_wildcard(s0, s0)?;
            b.add_trans(sa, bb.clone(), sab)?;
            b.add_wildcard(sa, sa)?;
            b.add_trans(sb, a.clone(), sab)?;
            b.add_wildcard(sb, sb)?;
            b.add_wildcard(sab, sab)?;
        }
        "eventually-then" => {
            arity(2)?;
            let (a, bb) = (&args[0], &args[1]);
            let s0 = b.add_state("s0")?;
            let s1 = b.add_state("s1")?;
            let s2 = b.add_state("s2")?;
            b.set_initial(s0)?;
            b.set_accepting(s2);
            b.add_trans(s0, a.clone(), s1)?;
            b.add_wildcard(s0, s0)?;
            b.add_trans(s1, bb.clone(), s2)?;
            b.add_wildcard(s1, s1)?;
            b.add_wildcard(s2, s2)?;
        }
        other => return Err(Error::Parse(format!("unknown template `{other}`"))),
    }
    b.build()
}

/// Parses the specification format:
/// `alphabet <label> ...`
/// `constraint <name> <template>(<arg>[,<arg>]) <op> <p>`
/// `constraint <name> dfa <path> <op> <p>`
/// DFA files referenced with `dfa` are resolved against `base_dir`.
pub fn parse_probdeclare(text: &str, base_dir: Option<&std::path::Path>) -> Result<ProbDeclareSpec> {
    let mut alphabet: BTreeSet<Label> = BTreeSet::new();
    let mut constraint_lines: Vec<(usize, Vec<String>)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let tokens = tokenize(line).map_err(|e| Error::AtLine(lineno, Box::new(e)))?;
        if tokens.is_empty() {
            continue;
        }
        let err = |e: Error| Error::AtLine(lineno, Box::new(e));
        match tokens[0].as_str() {
            "alphabet" => {
                for tok in &tokens[1..] {
                    alphabet.insert(Label::activity(tok.clone()).map_err(err)?);
                }
            }
            "constraint" => constraint_lines.push((lineno, tokens)),
            other => return Err(err(Error::Parse(format!("unknown directive `{other}`")))),
        }
    }
    let mut constraints = Vec::new();
    let mut names = BTreeSet::new();
    for (lineno, tokens) in constraint_lines {
        let err = |e: Error| Error::AtLine(lineno, Box::new(e));
        if tokens.len() < 5 {
            return Err(err(Error::Parse(
                "constraint needs name, formula, operator, probability".into(),
            )));
        }
        let name = tokens[1].clone();
        if !names.insert(name.clone()) {
            return Err(err(Error::DuplicateId(name)));
        }
        let (formula_tokens, op_token, p_token) =
            (&tokens[2..tokens.len() - 2], &tokens[tokens.len() - 2], &tokens[tokens.len() - 1]);
        let operator = CmpOp::parse(op_token).map_err(err)?;
        let probability = parse_probability(p_token).map_err(err)?;
        let (formula, source) = if formula_tokens[0] == "dfa" {
            if formula_tokens.len() != 2 {
                return Err(err(Error::Parse("dfa constraint needs one path".into())));
            }
            let path = match base_dir {
                Some(d) => d.join(&formula_tokens[1]),
                None => std::path::PathBuf::from(&formula_tokens[1]),
            };
            let content = std::fs::read_to_string(&path).map_err(Error::Io).map_err(err)?;
            (parse_dfa(&content).map_err(err)?, format!("dfa {}", formula_tokens[1]))
        } else {
            let call = formula_tokens.join(" ");
            let (template, args) = parse_template_call(&call).map_err(err)?;
            (
                template_to_dfa(&template, &args, &alphabet).map_err(err)?,
                call.clone(),
            )
        };
        constraints.push(ProbabilisticConstraint {
            name,
            formula,
            operator,
            probability,
            source,
        });
    }
    Ok(ProbDeclareSpec { alphabet, constraints })
}

fn parse_probability(text: &str) -> Result<f64> {
    let p = parse_weight(text).or_else(|e| {
        // parse_weight rejects 0, which is a legal probability threshold
        if text.trim() == "0" || text.trim() == "0.0" { Ok(0.0) } else { Err(e) }
    })?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Parse(format!("probability `{text}` outside [0,1]")));
    }
    Ok(p)
}

/// `template(arg1,arg2)`; args may be quoted in the surrounding tokenizer,
/// so by now they are plain comma-separated text.
fn parse_template_call(call: &str) -> Result<(String, Vec<Label>)> {
    let open = call
        .find('(')
        .ok_or_else(|| Error::Parse(format!("expected `template(args)`, got `{call}`")))?;
    if !call.ends_with(')') {
        return Err(Error::Parse(format!("unbalanced parentheses in `{call}`")));
    }
    let template = call[..open].trim().to_string();
    let args_text = &call[open + 1..call.len() - 1];
    let args = crate::conformance::parse_trace(args_text)?;
    Ok((template, args))
}

#[derive(Debug, Clone)]
pub struct ConstraintVerdict {
    pub name: String,
    pub source: String,
    pub operator: CmpOp,
    pub threshold: f64,
    pub computed: f64,
    pub holds: bool,
}

#[derive(Debug, Clone)]
pub struct ComplianceReport {
    pub verdicts: Vec<ConstraintVerdict>,
    pub compliant: bool,
    pub language_mass: f64,
    pub warnings: Vec<String>,
}

/// Checks each constraint's specification probability against its condition.
/// Livelocked inputs (language mass < 1) get a warning, not an error.
pub fn check_compliance(lsp: &Lsp, spec: &ProbDeclareSpec) -> Result<ComplianceReport> {
    check_compliance_with(lsp, spec, &AnalysisOptions::default())
}

pub fn check_compliance_with(
    lsp: &Lsp,
    spec: &ProbDeclareSpec,
    opts: &AnalysisOptions,
) -> Result<ComplianceReport> {
    let mut warnings = Vec::new();
    let mass = language_mass_with(lsp, opts)?;
    if mass < 1.0 - 1e-9 {
        warnings.push(format!(
            "language mass {mass:.9} < 1: the net has livelocks and does not induce a stochastic language"
        ));
    }
    let mut verdicts = Vec::new();
    for c in &spec.constraints {
        let result = spec_probability_with(lsp, &c.formula, opts)?;
        warnings.extend(result.warnings);
        let holds = c.operator.holds(result.value, c.probability);
        verdicts.push(ConstraintVerdict {
            name: c.name.clone(),
            source: c.source.clone(),
            operator: c.operator,
            threshold: c.probability,
            computed: result.value,
            holds,
        });
    }
    let compliant = verdicts.iter().all(|v| v.holds);
    Ok(ComplianceReport { verdicts, compliant, language_mass: mass, warnings })
}

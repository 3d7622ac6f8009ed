//! Compiled arithmetic expressions over a fixed list of variables, for
//! densities, boundary data, starting functions and semilinear terms.

use std::sync::Mutex;

use evalexpr::{
    build_operator_tree, ContextWithMutableVariables, DefaultNumericTypes, HashMapContext, Node, Value,
};

const FUNCTIONS: [&str; 16] = [
    "sqrt", "exp", "ln", "log10", "sin", "cos", "tan", "asin", "acos", "atan", "sinh", "cosh", "tanh", "abs", "pow",
    "hypot",
];

pub struct Expr {
    source: String,
    vars: Vec<&'static str>,
    tree: Node<DefaultNumericTypes>,
    context: Mutex<HashMapContext<DefaultNumericTypes>>,
}

impl std::fmt::Debug for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Expr({:?})", self.source)
    }
}

impl Expr {
    /// Bare function names (`sin`, `sqrt`, ...) are accepted alongside the
    /// `math::` forms; `pi` is predefined. The expression is evaluated once
    /// at the origin so unknown names fail here rather than mid-solve.
    pub fn compile(source: &str, vars: &[&'static str]) -> Result<Self, String> {
        let rewritten = qualify_functions(source);
        let tree = build_operator_tree::<DefaultNumericTypes>(&rewritten)
            .map_err(|e| format!("cannot parse expression '{source}': {e}"))?;
        let mut context = HashMapContext::<DefaultNumericTypes>::new();
        context
            .set_value("pi".into(), Value::Float(std::f64::consts::PI))
            .map_err(|e| e.to_string())?;
        let expr = Self { source: source.to_string(), vars: vars.to_vec(), tree, context: Mutex::new(context) };
        expr.try_eval(&vec![0.0; vars.len()])
            .map_err(|e| format!("cannot evaluate expression '{source}': {e}"))?;
        Ok(expr)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    fn try_eval(&self, values: &[f64]) -> Result<f64, String> {
        let mut ctx = self.context.lock().unwrap_or_else(|p| p.into_inner());
        for (name, &v) in self.vars.iter().zip(values) {
            ctx.set_value((*name).into(), Value::Float(v)).map_err(|e| e.to_string())?;
        }
        self.tree.eval_number_with_context(&*ctx).map_err(|e| e.to_string())
    }

    /// NaN when evaluation fails; callers validate finiteness.
    pub fn eval(&self, values: &[f64]) -> f64 {
        self.try_eval(values).unwrap_or(f64::NAN)
    }
}

fn qualify_functions(source: &str) -> String {
    let bytes = source.as_bytes();
    let mut out = String::with_capacity(source.len() + 16);
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b':') {
                i += 1;
            }
            let word = &source[start..i];
            let mut j = i;
            while j < bytes.len() && bytes[j] == b' ' {
                j += 1;
            }
            let call = j < bytes.len() && bytes[j] == b'(';
            if call && FUNCTIONS.contains(&word) {
                out.push_str("math::");
            }
            out.push_str(word);
        } else {
            out.push(c);
            i += 1;
        }
    }
    out
}

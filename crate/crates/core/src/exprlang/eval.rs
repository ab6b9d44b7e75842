use thiserror::Error;

use super::ast::{BinOp, Expr, Func};
use super::jet::{self, DomainError, Jet, MAX_ORDER};
use crate::scalar::{Mode, C64};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unknown identifier '{0}'")]
    UnknownIdentifier(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("the imaginary unit is not available in real mode")]
    ImaginaryInRealMode,
    #[error("jet order {0} exceeds the supported maximum")]
    OrderTooHigh(usize),
}

impl From<DomainError> for EvalError {
    fn from(e: DomainError) -> Self {
        EvalError::Domain(e.0)
    }
}

/// Bindings for jet evaluation: identifiers bound to jets (coordinates, or
/// composed jets when pulling back through an embedding) and parameters bound
/// to constants.
#[derive(Debug, Clone)]
pub struct JetEnv<'a> {
    nvars: usize,
    order: usize,
    mode: Mode,
    vars: Vec<(&'a str, Jet)>,
    params: Vec<(&'a str, C64)>,
}

impl<'a> JetEnv<'a> {
    pub fn new(nvars: usize, order: usize, mode: Mode) -> Result<Self, EvalError> {
        if order > MAX_ORDER {
            return Err(EvalError::OrderTooHigh(order));
        }
        Ok(JetEnv { nvars, order, mode, vars: Vec::new(), params: Vec::new() })
    }

    /// Environment where `names[i]` is the i-th jet variable expanded at `point[i]`.
    pub fn coordinates(names: &'a [String], point: &[C64], order: usize, mode: Mode) -> Result<Self, EvalError> {
        let mut env = JetEnv::new(names.len(), order, mode)?;
        for (i, (name, &value)) in names.iter().zip(point).enumerate() {
            env.vars.push((name.as_str(), Jet::variable(names.len(), order, i, value)));
        }
        Ok(env)
    }

    pub fn bind(&mut self, name: &'a str, jet: Jet) {
        assert_eq!(jet.nvars(), self.nvars);
        self.vars.push((name, jet));
    }

    pub fn bind_param(&mut self, name: &'a str, value: C64) {
        self.params.push((name, value));
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    fn constant(&self, v: C64) -> Jet {
        Jet::constant(self.nvars, self.order, v)
    }

    fn lookup(&self, name: &str) -> Result<Jet, EvalError> {
        if let Some((_, jet)) = self.vars.iter().find(|(n, _)| *n == name) {
            return Ok(jet.clone());
        }
        if let Some((_, v)) = self.params.iter().find(|(n, _)| *n == name) {
            return Ok(self.constant(*v));
        }
        match name {
            "pi" => Ok(self.constant(C64::new(std::f64::consts::PI, 0.0))),
            "e" => Ok(self.constant(C64::new(std::f64::consts::E, 0.0))),
            "i" if self.mode.is_real() => Err(EvalError::ImaginaryInRealMode),
            "i" => Ok(self.constant(C64::new(0.0, 1.0))),
            _ => Err(EvalError::UnknownIdentifier(name.to_string())),
        }
    }
}

fn apply(func: Func, arg: &Jet, mode: Mode) -> Result<Jet, EvalError> {
    let a = arg.value();
    let k = arg.order();
    let series = match func {
        Func::Exp => jet::series_exp(a, k, mode),
        Func::Log => jet::series_log(a, k, mode)?,
        Func::Sqrt => jet::series_sqrt(a, k, mode)?,
        Func::Sin => jet::series_sin_cos(a, k, mode, false),
        Func::Cos => jet::series_sin_cos(a, k, mode, true),
        Func::Sinh => jet::series_sinh_cosh(a, k, mode, false),
        Func::Cosh => jet::series_sinh_cosh(a, k, mode, true),
        Func::Tan => jet::series_tan(a, k, mode, false)?,
        Func::Tanh => jet::series_tan(a, k, mode, true)?,
        Func::Atan => jet::series_atan(a, k, mode)?,
    };
    Ok(arg.compose(&series))
}

fn power(base: &Jet, exponent: &Jet, mode: Mode) -> Result<Jet, EvalError> {
    let e = exponent.value();
    if exponent.is_constant() && e.im == 0.0 && e.re.fract() == 0.0 && e.re.abs() <= 1024.0 {
        return Ok(base.powi(e.re as i64)?);
    }
    // Non-integer exponent: exp(b · log a).
    let log_a = apply(Func::Log, base, mode)?;
    apply(Func::Exp, &(exponent * &log_a), mode)
}

impl Expr {
    /// Evaluates the expression as a jet under `env`.
    pub fn eval_jet(&self, env: &JetEnv<'_>) -> Result<Jet, EvalError> {
        match self {
            Expr::Num(v) => Ok(env.constant(C64::new(*v, 0.0))),
            Expr::Ident(name) => env.lookup(name),
            Expr::Neg(inner) => Ok(-inner.eval_jet(env)?),
            Expr::Call(func, arg) => apply(*func, &arg.eval_jet(env)?, env.mode),
            Expr::Binary(op, lhs, rhs) => {
                let a = lhs.eval_jet(env)?;
                let b = rhs.eval_jet(env)?;
                match op {
                    BinOp::Add => Ok(&a + &b),
                    BinOp::Sub => Ok(&a - &b),
                    BinOp::Mul => Ok(&a * &b),
                    BinOp::Div => Ok(a.div(&b)?),
                    BinOp::Pow => power(&a, &b, env.mode),
                }
            }
        }
    }

    /// Plain value at a point (an order-0 jet).
    pub fn eval_value(&self, names: &[String], point: &[C64], params: &[(String, C64)], mode: Mode) -> Result<C64, EvalError> {
        let mut env = JetEnv::coordinates(names, point, 0, mode)?;
        for (n, v) in params {
            env.bind_param(n, *v);
        }
        Ok(self.eval_jet(&env)?.value())
    }
}

/// Jet of `expr` at `point`, with `coordinates[i]` the i-th variable.
pub fn evaluate_jet(
    expr: &Expr,
    coordinates: &[String],
    point: &[C64],
    params: &[(String, C64)],
    order: usize,
    mode: Mode,
) -> Result<Jet, EvalError> {
    if mode.is_real() && point.iter().any(|p| p.im != 0.0) {
        return Err(EvalError::Domain("complex coordinate value in real mode".into()));
    }
    let mut env = JetEnv::coordinates(coordinates, point, order, mode)?;
    for (n, v) in params {
        env.bind_param(n, *v);
    }
    expr.eval_jet(&env)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprlang::parse;
    use crate::scalar::re;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn exp_at_zero_has_unit_coefficients() {
        let e = parse("exp(x)").unwrap();
        let j = evaluate_jet(&e, &names(&["x"]), &[re(0.0)], &[], 3, Mode::Real).unwrap();
        for k in 0..=3 {
            assert!((j.derivative(&[k]) - re(1.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn inverse_square_against_central_difference() {
        let e = parse("1/t^2").unwrap();
        let n = names(&["t"]);
        let j = evaluate_jet(&e, &n, &[re(2.0)], &[], 1, Mode::Real).unwrap();
        assert_eq!(j.value(), re(0.25));
        assert_eq!(j.derivative(&[1]), re(-0.25));
        let h = 1e-5;
        let f = |t: f64| e.eval_value(&n, &[re(t)], &[], Mode::Real).unwrap().re;
        let fd = (f(2.0 + h) - f(2.0 - h)) / (2.0 * h);
        assert!((fd - j.derivative(&[1]).re).abs() < 1e-9);
    }

    #[test]
    fn domain_errors_in_real_mode() {
        let n = names(&["x"]);
        for src in ["log(x)", "sqrt(x)", "1/(x+1)", "x^0.5"] {
            let e = parse(src).unwrap();
            let r = evaluate_jet(&e, &n, &[re(-1.0)], &[], 1, Mode::Real);
            assert!(matches!(r, Err(EvalError::Domain(_))), "{src}: {r:?}");
        }
        let e = parse("log(x)").unwrap();
        assert!(evaluate_jet(&e, &n, &[re(-1.0)], &[], 1, Mode::Complex).is_ok());
    }

    #[test]
    fn unknown_identifier_and_imaginary_unit() {
        let e = parse("x + q").unwrap();
        let r = evaluate_jet(&e, &names(&["x"]), &[re(1.0)], &[], 0, Mode::Real);
        assert_eq!(r, Err(EvalError::UnknownIdentifier("q".into())));
        let e = parse("x + i").unwrap();
        assert_eq!(
            evaluate_jet(&e, &names(&["x"]), &[re(1.0)], &[], 0, Mode::Real),
            Err(EvalError::ImaginaryInRealMode)
        );
        let v = evaluate_jet(&e, &names(&["x"]), &[re(1.0)], &[], 0, Mode::Complex).unwrap();
        assert_eq!(v.value(), C64::new(1.0, 1.0));
    }

    #[test]
    fn parameters_are_constants() {
        let e = parse("m*x^2").unwrap();
        let j = evaluate_jet(&e, &names(&["x"]), &[re(3.0)], &[("m".into(), re(2.0))], 2, Mode::Real).unwrap();
        assert_eq!(j.value(), re(18.0));
        assert_eq!(j.derivative(&[2]), re(4.0));
    }
}

//! Expressions over bounded integers, booleans and identifiers.

use std::collections::BTreeMap;
use std::fmt;

use super::value::{IntRange, Name, Value};
use super::KernelError;

/// Process-local variable store. Sorted, so it is its own canonical form.
pub type Store = BTreeMap<Name, Value>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength, higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Mod => 6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Const(Value),
    Var(Name),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn int(i: i64) -> Expr {
        Expr::Const(Value::Int(i))
    }

    pub fn bool(b: bool) -> Expr {
        Expr::Const(Value::Bool(b))
    }

    pub fn id(s: &str) -> Expr {
        Expr::Const(Value::id(s))
    }

    pub fn var(s: &str) -> Expr {
        Expr::Var(Name::from(s))
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn eq(a: Expr, b: Expr) -> Expr {
        Expr::bin(BinOp::Eq, a, b)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Expr) -> Expr {
        Expr::Unary(UnOp::Not, Box::new(a))
    }

    /// Variables read by the expression, in first-occurrence order.
    pub fn vars(&self) -> Vec<Name> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<Name>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(n) => {
                if !out.contains(n) {
                    out.push(n.clone());
                }
            }
            Expr::Unary(_, a) => a.collect_vars(out),
            Expr::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Replaces variables according to `f` (returning `None` keeps the variable).
    pub fn rename(&self, f: &impl Fn(&Name) -> Option<Expr>) -> Expr {
        match self {
            Expr::Const(_) => self.clone(),
            Expr::Var(n) => f(n).unwrap_or_else(|| self.clone()),
            Expr::Unary(op, a) => Expr::Unary(*op, Box::new(a.rename(f))),
            Expr::Binary(op, a, b) => {
                Expr::Binary(*op, Box::new(a.rename(f)), Box::new(b.rename(f)))
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(v) => write!(f, "{v}"),
            Expr::Var(n) => write!(f, "{n}"),
            Expr::Unary(UnOp::Not, a) => write!(f, "!{}", Paren(a, 7)),
            Expr::Unary(UnOp::Neg, a) => write!(f, "-{}", Paren(a, 7)),
            Expr::Binary(op, a, b) => {
                let p = op.precedence();
                write!(f, "{} {} {}", Paren(a, p), op.symbol(), Paren(b, p + 1))
            }
        }
    }
}

struct Paren<'a>(&'a Expr, u8);

impl fmt::Display for Paren<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Expr::Binary(op, ..) if op.precedence() < self.1 => write!(f, "({})", self.0),
            e => write!(f, "{e}"),
        }
    }
}

/// Evaluates an expression. Integer results outside `ints` are a range fault.
pub fn eval(expr: &Expr, store: &Store, ints: IntRange) -> Result<Value, KernelError> {
    match expr {
        Expr::Const(v) => Ok(v.clone()),
        Expr::Var(n) => store
            .get(n)
            .cloned()
            .ok_or_else(|| KernelError::Unbound(n.to_string())),
        Expr::Unary(op, a) => {
            let v = eval(a, store, ints)?;
            match (op, v) {
                (UnOp::Not, Value::Bool(b)) => Ok(Value::Bool(!b)),
                (UnOp::Neg, Value::Int(i)) => checked(-i, ints, expr),
                (_, v) => Err(KernelError::Type(format!("cannot apply {op:?} to {v}"))),
            }
        }
        Expr::Binary(op, a, b) => {
            // Short-circuit booleans so guarded lookups behave as expected.
            if matches!(op, BinOp::And | BinOp::Or) {
                let l = eval(a, store, ints)?
                    .as_bool()
                    .ok_or_else(|| KernelError::Type(format!("non-boolean operand in {expr}")))?;
                if (*op == BinOp::And && !l) || (*op == BinOp::Or && l) {
                    return Ok(Value::Bool(l));
                }
                let r = eval(b, store, ints)?
                    .as_bool()
                    .ok_or_else(|| KernelError::Type(format!("non-boolean operand in {expr}")))?;
                return Ok(Value::Bool(r));
            }
            let l = eval(a, store, ints)?;
            let r = eval(b, store, ints)?;
            match op {
                BinOp::Eq => return Ok(Value::Bool(l == r)),
                BinOp::Ne => return Ok(Value::Bool(l != r)),
                _ => {}
            }
            let (x, y) = match (&l, &r) {
                (Value::Int(x), Value::Int(y)) => (*x, *y),
                _ => {
                    return Err(KernelError::Type(format!(
                        "non-integer operands in {expr}: {l}, {r}"
                    )))
                }
            };
            match op {
                BinOp::Add => checked(x + y, ints, expr),
                BinOp::Sub => checked(x - y, ints, expr),
                BinOp::Mul => checked(x * y, ints, expr),
                BinOp::Div | BinOp::Mod if y == 0 => {
                    Err(KernelError::Range(format!("division by zero in {expr}")))
                }
                BinOp::Div => checked(x.div_euclid(y), ints, expr),
                BinOp::Mod => checked(x.rem_euclid(y), ints, expr),
                BinOp::Lt => Ok(Value::Bool(x < y)),
                BinOp::Le => Ok(Value::Bool(x <= y)),
                BinOp::Gt => Ok(Value::Bool(x > y)),
                BinOp::Ge => Ok(Value::Bool(x >= y)),
                BinOp::Eq | BinOp::Ne | BinOp::And | BinOp::Or => unreachable!(),
            }
        }
    }
}

fn checked(v: i64, ints: IntRange, expr: &Expr) -> Result<Value, KernelError> {
    if ints.contains(v) {
        Ok(Value::Int(v))
    } else {
        Err(KernelError::Range(format!(
            "{expr} evaluates to {v}, outside {}..{}",
            ints.lo, ints.hi
        )))
    }
}

pub fn eval_bool(expr: &Expr, store: &Store, ints: IntRange) -> Result<bool, KernelError> {
    eval(expr, store, ints)?
        .as_bool()
        .ok_or_else(|| KernelError::Type(format!("guard {expr} is not boolean")))
}

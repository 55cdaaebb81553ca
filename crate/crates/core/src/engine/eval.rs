use std::cmp::Ordering;
use std::collections::BTreeMap;

use super::router::Routers;
use super::value::Value;
use super::EngineError;
use crate::dsl::{Expression, Function, STANDARD_ROUTER};
use crate::number::Number;

pub type Bindings = BTreeMap<String, Value>;

fn mismatch(function: Function, value: &Value) -> EngineError {
    EngineError::TypeMismatch {
        function,
        value: value.to_string(),
    }
}

fn number(function: Function, value: &Value) -> Result<Number, EngineError> {
    value.as_number().ok_or_else(|| mismatch(function, value))
}

fn arithmetic(function: Function, values: &[Value]) -> Result<Value, EngineError> {
    let mut nums = values.iter().map(|v| number(function, v));
    let first = nums.next().expect("arity checked at parse")?;
    let mut acc = first;
    for n in nums {
        let n = n?;
        acc = match (function, acc, n) {
            (Function::Div, _, _) => {
                if n.as_f64() == 0.0 {
                    return Err(EngineError::DivideByZero);
                }
                Number::Float(acc.as_f64() / n.as_f64())
            }
            (_, Number::Int(a), Number::Int(b)) => {
                let r = match function {
                    Function::Add => a.checked_add(b),
                    Function::Sub => a.checked_sub(b),
                    _ => a.checked_mul(b),
                };
                Number::Int(r.ok_or(EngineError::Overflow(function))?)
            }
            (_, a, b) => Number::Float(match function {
                Function::Add => a.as_f64() + b.as_f64(),
                Function::Sub => a.as_f64() - b.as_f64(),
                _ => a.as_f64() * b.as_f64(),
            }),
        };
    }
    Ok(Value::from(acc))
}

fn compare(function: Function, a: &Value, b: &Value) -> Result<bool, EngineError> {
    let ord = number(function, a)?
        .compare(number(function, b)?)
        .ok_or_else(|| mismatch(function, a))?;
    Ok(match function {
        Function::Ge => ord != Ordering::Less,
        Function::Gt => ord == Ordering::Greater,
        Function::Le => ord != Ordering::Greater,
        _ => ord == Ordering::Less,
    })
}

/// Evaluates `expr` under `bindings`. Only `read` touches the routers.
pub(crate) fn eval(
    expr: &Expression,
    bindings: &Bindings,
    routers: &mut Routers,
) -> Result<Value, EngineError> {
    match expr {
        Expression::Constant(a) => Ok(Value::from(a)),
        Expression::Variable(v) => bindings
            .get(v)
            .cloned()
            .ok_or_else(|| EngineError::UnboundVariable(v.clone())),
        Expression::Call { function, args } => {
            let f = *function;
            match f {
                Function::And => {
                    for a in args {
                        if !eval(a, bindings, routers)?.is_truthy() {
                            return Ok(Value::boolean(false));
                        }
                    }
                    Ok(Value::boolean(true))
                }
                Function::Or => {
                    for a in args {
                        if eval(a, bindings, routers)?.is_truthy() {
                            return Ok(Value::boolean(true));
                        }
                    }
                    Ok(Value::boolean(false))
                }
                Function::Not => Ok(Value::boolean(!eval(&args[0], bindings, routers)?.is_truthy())),
                Function::Read => {
                    let router = match args.first() {
                        None => STANDARD_ROUTER.to_string(),
                        Some(a) => match eval(a, bindings, routers)? {
                            Value::Symbol(s) | Value::String(s) => s,
                            other => return Err(mismatch(f, &other)),
                        },
                    };
                    routers.read(&router)
                }
                _ => {
                    let values = args
                        .iter()
                        .map(|a| eval(a, bindings, routers))
                        .collect::<Result<Vec<_>, _>>()?;
                    match f {
                        Function::Ge | Function::Gt | Function::Le | Function::Lt => {
                            compare(f, &values[0], &values[1]).map(Value::boolean)
                        }
                        Function::Eq | Function::Neq => {
                            for v in &values {
                                if matches!(v, Value::Nil) {
                                    return Err(mismatch(f, v));
                                }
                            }
                            let same = values[0].matches(&values[1]);
                            Ok(Value::boolean(if f == Function::Eq { same } else { !same }))
                        }
                        _ => arithmetic(f, &values),
                    }
                }
            }
        }
    }
}

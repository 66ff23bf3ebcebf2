//! Expands Fanout macros into the constant-depth gadget.

use crate::circuit::{Circuit, Gate, Level, Step};
use crate::error::{Error, Result};

use super::gadgets::{fanout, FANOUT_DEPTH};
use super::lower::shell;

pub fn expand(c: &Circuit) -> Result<Circuit> {
    let mut out = shell(c);
    for layer in &c.layers {
        let fans: Vec<&Gate> = layer.gates.iter().filter(|g| matches!(g, Gate::Fanout { .. })).collect();
        if fans.is_empty() {
            out.layers.push(layer.clone());
            continue;
        }
        let base = out.open(FANOUT_DEPTH, Step::Fanout);
        // Fanouts sharing a QPU in one layer take disjoint slices of its pool.
        let mut used = vec![0usize; out.qpus];
        for g in &layer.gates {
            match g {
                Gate::Fanout { control, targets } => {
                    if targets.iter().any(|t| t.qpu != control.qpu) {
                        return Err(Error::Lowering("Fanout targets must share the control's QPU".into()));
                    }
                    let q = control.qpu;
                    let anc = out.pool(q, used[q] + targets.len())[used[q]..].to_vec();
                    used[q] += targets.len();
                    if anc.iter().any(|a| layer.touches(*a)) {
                        return Err(Error::Lowering("Fanout ancilla pool is in use".into()));
                    }
                    fanout(&mut out, base, *control, targets, &anc);
                }
                other => out.put(base, other.clone())?,
            }
        }
    }
    if !out.has_macros() {
        out.level = Level::Physical;
    }
    out.validate()?;
    Ok(out)
}

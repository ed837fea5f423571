//! Channels, layers and frame assignments built from a config.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use anyhow::{bail, Context, Result};
use lowdeg_tomo::channel::{
    bitflip_product, correlated_xflip_channel, decaying_dephasing_channel, identity_channel,
    ChannelModel, GateLayer,
};
use lowdeg_tomo::estimator::{standard_entry, FrameAssignment};
use lowdeg_tomo::frame::{
    g_min_closed_form, g_shadow, rotated_frame, rotated_minimized_frame, shipped_table, FrameTable,
    SHIPPED_GATES,
};
use lowdeg_tomo::{gates, PauliString};

use crate::config::{ChannelKind, ChannelSection, FrameSpec, LayerKind};

pub fn build_channel(c: &ChannelSection, n: usize) -> Result<ChannelModel<f64>> {
    let ch = match c.model {
        ChannelKind::Dephasing => decaying_dephasing_channel(n, c.p0, c.gamma0)?,
        ChannelKind::Xflip => correlated_xflip_channel(n, c.epsilon)?,
        ChannelKind::Bitflip => bitflip_product(n, c.p)?,
        ChannelKind::Identity => identity_channel(n)?,
    };
    Ok(ch.with_degree(c.degree.min(n))?)
}

pub fn build_layer(c: &ChannelSection, n: usize) -> Result<Option<GateLayer<f64>>> {
    Ok(match c.layer {
        LayerKind::None => None,
        LayerKind::Paired => Some(GateLayer::paired(n, &gates::by_name(&c.gate)?)?),
        LayerKind::Single => Some(GateLayer::single_centered(n, &gates::by_name(&c.gate)?)?),
    })
}

/// `(code, gamma, delta)` for an entry code such as `0x` on qubit `q`.
pub fn parse_entry(n: usize, code: &str, q: usize) -> Result<(String, PauliString, PauliString)> {
    if q >= n {
        bail!("entry qubit {q} outside a register of {n} qubits");
    }
    let code = code.to_ascii_lowercase().replace('i', "0");
    let (a, b) = standard_entry(n, &code, q)?;
    Ok((code, a, b))
}

/// Frame tables shared across runs. Pair tables are keyed by gate name.
#[derive(Default)]
pub struct FrameLibrary {
    single: Mutex<HashMap<FrameSpec, Arc<FrameTable<f64>>>>,
    pairs: Mutex<HashMap<(FrameSpec, String), Arc<FrameTable<f64>>>>,
}

impl FrameLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    fn single(&self, spec: FrameSpec) -> Arc<FrameTable<f64>> {
        let base = match spec {
            FrameSpec::Shadow | FrameSpec::RotatedShadow => FrameSpec::Shadow,
            FrameSpec::Min | FrameSpec::RotatedMin => FrameSpec::Min,
        };
        self.single
            .lock()
            .expect("frame cache")
            .entry(base)
            .or_insert_with(|| {
                Arc::new(if base == FrameSpec::Shadow {
                    g_shadow()
                } else {
                    g_min_closed_form()
                })
            })
            .clone()
    }

    /// Rotated table for `gate`; shipped tables are loaded, others computed.
    pub fn pair(&self, spec: FrameSpec, gate: &str) -> Result<Arc<FrameTable<f64>>> {
        let key = (spec, gate.to_ascii_lowercase());
        if let Some(t) = self.pairs.lock().expect("frame cache").get(&key) {
            return Ok(t.clone());
        }
        let u = gates::by_name::<f64>(gate)?;
        let table = match spec {
            FrameSpec::RotatedMin if SHIPPED_GATES.contains(&key.1.as_str()) => {
                shipped_table(&key.1)?
            }
            FrameSpec::RotatedMin => rotated_minimized_frame(&u)?.0,
            FrameSpec::RotatedShadow => rotated_frame(&u, &g_shadow::<f64>().tensor(&g_shadow())?)?,
            _ => bail!("{} tables are not rotated", spec.name()),
        };
        let table = Arc::new(table);
        self.pairs
            .lock()
            .expect("frame cache")
            .insert(key, table.clone());
        Ok(table)
    }

    /// Per-site tables for plain specs; rotated specs put a rotated table on
    /// every gate of `layer` and the plain counterpart on idle qubits.
    pub fn assignment(
        &self,
        spec: FrameSpec,
        n: usize,
        layer: Option<&GateLayer<f64>>,
        gate: &str,
    ) -> Result<FrameAssignment<f64>> {
        let single = self.single(spec);
        if !spec.is_rotated() {
            return Ok(FrameAssignment::per_site(n, single)?);
        }
        let layer = layer.with_context(|| format!("{} frames need a gate layer", spec.name()))?;
        let pair = self.pair(spec, gate)?;
        let mut covered = vec![false; n];
        let mut blocks = Vec::new();
        for (qs, _) in layer.elements() {
            if qs.len() != 2 {
                bail!("rotated frames need two-qubit gates, found support {qs:?}");
            }
            qs.iter().for_each(|&q| covered[q] = true);
            blocks.push((qs.clone(), pair.clone()));
        }
        blocks.extend(
            (0..n)
                .filter(|&q| !covered[q])
                .map(|q| (vec![q], single.clone())),
        );
        blocks.sort_by_key(|(qs, _)| qs[0]);
        Ok(FrameAssignment::new(n, blocks)?)
    }
}

/// The channel seen by `assignment`: `channel` after the gates of `layer`
/// that the frames do not absorb.
pub fn effective_channel(
    channel: &ChannelModel<f64>,
    layer: Option<&GateLayer<f64>>,
    assignment: &FrameAssignment<f64>,
) -> Result<ChannelModel<f64>> {
    match layer {
        Some(l) => Ok(channel.after_layer(&assignment.split_layer(l)?.1)?),
        None => Ok(channel.clone()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ExperimentConfig, ExperimentKind};

    #[test]
    fn entries_parse() {
        let (code, a, b) = parse_entry(4, "IX", 2).unwrap();
        assert_eq!(code, "0x");
        assert!(a.is_identity());
        assert_eq!(b.to_string(), "X2");
        assert!(parse_entry(2, "00", 2).is_err());
    }

    #[test]
    fn rotated_assignment_covers_idle_qubits() {
        let cfg = ExperimentConfig::preset(ExperimentKind::Fig6);
        let layer = build_layer(&cfg.channel, 3).unwrap();
        let lib = FrameLibrary::new();
        let a = lib
            .assignment(
                FrameSpec::RotatedShadow,
                3,
                layer.as_ref(),
                &cfg.channel.gate,
            )
            .unwrap();
        assert_eq!(a.blocks().len(), 2);
        assert!(a.blocks()[0].1.unitary().is_some());
        assert!(a.blocks()[1].1.unitary().is_none());
        assert!(lib
            .assignment(FrameSpec::RotatedMin, 3, None, "iswap")
            .is_err());
    }
}

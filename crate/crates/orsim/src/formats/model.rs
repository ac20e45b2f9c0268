//! `orsim-model v1`: window, channel configuration with the full channel
//! enumeration, lambda table and the boosted trees.
//!
//! Floats are written in shortest round-trip form, so parsing and writing
//! again reproduces the file byte for byte.

use std::fmt::Write as _;
use std::path::Path;

use orsim_core::aggregate::WindowSpec;
use orsim_core::boosting::{BoostedModel, Ensemble, Node, Tree};
use orsim_core::channels::frequency::{Family, FamilySet, FrequencyFeatureConfig};
use orsim_core::features::{ChannelConfig, ChannelGroup};
use orsim_core::pyramid::{LambdaEntry, LambdaTable};

use super::{write_provenance, Cursor};
use crate::config::Provenance;
use crate::error::Result;

pub const MODEL_HEADER: &str = "orsim-model v1";

pub fn write_model(model: &BoostedModel, provenance: &Provenance) -> String {
    let mut s = String::new();
    let w = &model.window;
    let c = &model.channels;
    let f = &c.frequency;
    let floats = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    s.push_str(MODEL_HEADER);
    s.push('\n');
    write_provenance(&mut s, provenance);
    let _ = writeln!(s, "window {} {} {} {}", w.width, w.height, w.object_width, w.object_height);
    let _ = writeln!(s, "shrink {}", c.shrink);
    let _ = writeln!(s, "color_space {}", c.color_space);
    let _ = writeln!(s, "order {}", f.order);
    let _ = writeln!(s, "sigma {}", f.sigma);
    let _ = writeln!(s, "radii {}", floats(&f.radii));
    let _ = writeln!(s, "families {}", f.families);
    let names = c.channel_names();
    let _ = writeln!(s, "channels {}", names.len());
    for name in &names {
        let _ = writeln!(s, "channel {name}");
    }
    let _ = writeln!(s, "lambda_groups {}", model.lambda.entries.len());
    for e in &model.lambda.entries {
        let _ = writeln!(s, "lambda {} {} {}", e.group, e.lambda, e.r2);
    }
    let e = &model.ensemble;
    let _ = writeln!(s, "trees {}", e.len());
    for ((tree, alpha), theta) in e.trees().iter().zip(e.alphas()).zip(e.cascade()) {
        let _ = writeln!(s, "tree {alpha} {theta} {}", tree.nodes().len());
        for node in tree.nodes() {
            let _ = match node {
                Node::Split { feature, threshold, left, right } => {
                    writeln!(s, "split {feature} {threshold} {left} {right}")
                }
                Node::Leaf { value } => writeln!(s, "leaf {value}"),
            };
        }
    }
    s.push_str("end\n");
    s
}

pub fn read_model(text: &str, path: &Path) -> Result<(BoostedModel, Provenance)> {
    let mut cur = Cursor::new(text, path);
    let header = cur.expect("orsim-model")?;
    if header != ["v1"] {
        return Err(cur.error(format!("unsupported model version {header:?}")));
    }
    let provenance = cur.provenance()?;
    let w = cur.expect("window")?;
    let [ww, wh, ow, oh] = w[..] else {
        return Err(cur.error("`window` takes width, height, object width and object height"));
    };
    let (ww, wh, ow, oh) = (cur.parse(ww)?, cur.parse(wh)?, cur.parse(ow)?, cur.parse(oh)?);
    let shrink: usize = cur.value("shrink")?;
    let color_space = cur.value::<String>("color_space")?.parse().map_err(|e| cur.error(format!("{e}")))?;
    let order = cur.value("order")?;
    let sigma = cur.value("sigma")?;
    let radii = cur.expect("radii")?.iter().map(|t| cur.parse(t)).collect::<Result<Vec<f64>>>()?;
    let fams: Vec<Family> = cur
        .value::<String>("families")?
        .split(',')
        .map(|f| f.parse().map_err(|e| cur.error(format!("{e}"))))
        .collect::<Result<_>>()?;
    let frequency = FrequencyFeatureConfig { order, sigma, radii, families: FamilySet::of(&fams) };
    let channels = ChannelConfig::new(color_space, frequency, shrink).map_err(|e| cur.error(e.to_string()))?;
    let window = WindowSpec::new(ww, wh, shrink, ow, oh).map_err(|e| cur.error(e.to_string()))?;

    let n: usize = cur.value("channels")?;
    let expected = channels.channel_names();
    if n != expected.len() {
        return Err(cur.error(format!("{n} channels listed, configuration yields {}", expected.len())));
    }
    for name in &expected {
        let got: String = cur.value("channel")?;
        if &got != name {
            return Err(cur.error(format!("channel `{got}` where `{name}` was expected")));
        }
    }

    let groups: usize = cur.value("lambda_groups")?;
    let mut entries = Vec::with_capacity(groups);
    for _ in 0..groups {
        let t = cur.expect("lambda")?;
        let [g, l, r] = t[..] else {
            return Err(cur.error("`lambda` takes group, exponent and R²"));
        };
        let group: ChannelGroup = g.parse().map_err(|e| cur.error(format!("{e}")))?;
        entries.push(LambdaEntry { group, lambda: cur.parse(l)?, r2: cur.parse(r)? });
    }

    let n_trees: usize = cur.value("trees")?;
    let (mut trees, mut alphas, mut cascade) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..n_trees {
        let t = cur.expect("tree")?;
        let [a, th, k] = t[..] else {
            return Err(cur.error("`tree` takes alpha, cascade threshold and node count"));
        };
        alphas.push(cur.parse::<f64>(a)?);
        cascade.push(cur.parse::<f64>(th)?);
        let k: usize = cur.parse(k)?;
        let mut nodes = Vec::with_capacity(k);
        for _ in 0..k {
            nodes.push(read_node(&mut cur)?);
        }
        trees.push(Tree::from_nodes(nodes).map_err(|e| cur.error(e.to_string()))?);
    }
    cur.expect("end")?;
    cur.finish()?;
    let ensemble = Ensemble::from_parts(trees, alphas, cascade).map_err(|e| cur.error(e.to_string()))?;
    let model = BoostedModel::new(ensemble, window, channels, LambdaTable { entries }).map_err(|e| cur.error(e.to_string()))?;
    Ok((model, provenance))
}

fn read_node(cur: &mut Cursor<'_>) -> Result<Node> {
    let tokens = cur.expect_any(&["split", "leaf"])?;
    match tokens.as_slice() {
        ["split", f, t, l, r] => Ok(Node::Split {
            feature: cur.parse(f)?,
            threshold: cur.parse(t)?,
            left: cur.parse(l)?,
            right: cur.parse(r)?,
        }),
        ["leaf", v] => Ok(Node::Leaf { value: cur.parse(v)? }),
        _ => Err(cur.error("malformed tree node")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use orsim_core::imaging::ColorSpace;

    fn model() -> BoostedModel {
        let freq = FrequencyFeatureConfig::new(2, 3.0, 2, FamilySet::ALL).unwrap();
        let channels = ChannelConfig::new(ColorSpace::Hsv, freq, 4).unwrap();
        let window = WindowSpec::new(16, 12, 4, 8, 8).unwrap();
        let tree = Tree::from_nodes(vec![
            Node::Split { feature: 3, threshold: 0.1, left: 1, right: 2 },
            Node::Leaf { value: -1.0 },
            Node::Leaf { value: 1.0 },
        ])
        .unwrap();
        let leaf = Tree::from_nodes(vec![Node::Leaf { value: 1.0 }]).unwrap();
        let ensemble =
            Ensemble::from_parts(vec![tree, leaf], vec![1.0986122886681098, 0.3], vec![f64::NEG_INFINITY, -0.7]).unwrap();
        let mut lambda = LambdaTable::zero();
        lambda.entries[1].lambda = 0.123456789;
        BoostedModel::new(ensemble, window, channels, lambda).unwrap()
    }

    fn prov() -> Provenance {
        Provenance { config_sha256: "ab".repeat(32), seed: 7 }
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let text = write_model(&model(), &prov());
        let (back, p) = read_model(&text, Path::new("m")).unwrap();
        assert_eq!(back, model());
        assert_eq!(p, prov());
        assert_eq!(write_model(&back, &p), text);
    }

    #[test]
    fn tampered_files_are_rejected() {
        let text = write_model(&model(), &prov());
        for (from, to) in [("orsim-model v1", "orsim-model v2"), ("channel GM", "channel XX"), ("end\n", "")] {
            assert!(read_model(&text.replacen(from, to, 1), Path::new("m")).is_err(), "{from}");
        }
        assert!(read_model(&format!("{text}extra\n"), Path::new("m")).is_err());
    }
}

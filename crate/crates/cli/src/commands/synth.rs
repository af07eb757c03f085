use anyhow::Result;
use gapkit::synth::{generate_paired, SynthSpec};

use crate::provenance::{write_provenance, Provenance};
use crate::SynthArgs;

pub fn run(args: SynthArgs) -> Result<()> {
    let spec = SynthSpec {
        n: args.n,
        d_latent: args.d_latent,
        d_embed: args.d_embed,
        gap: args.gap,
        noise: args.noise,
        seed: args.seed,
        rotation: args.rotation.to_core(),
    };
    let ds = generate_paired(&spec)?;
    let manifest = crate::commands::write_pair_files(
        &args.out,
        ds.images().data(),
        ds.texts().data(),
        ds.images().ids(),
    )?;
    write_provenance(
        &args.out,
        &Provenance {
            command: "synth",
            method: None,
            seed: Some(args.seed),
            params: serde_json::to_value(&spec)?,
            inputs: vec![],
        },
    )?;
    println!("wrote {} pairs to {}", ds.len(), manifest.display());
    Ok(())
}

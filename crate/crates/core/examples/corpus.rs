//! Generates a small synthetic task and prints a few examples in all three
//! channels, plus an ASR-style corruption of one transcript.

use imitkd::corpus::{corrupt_transcript, NoiseChannelConfig, SplitCorpus, TaskParams, TaskSpec};

fn main() -> imitkd::Result<()> {
    let spec = TaskSpec::generate(&TaskParams::default(), 1)?;
    let corpus = SplitCorpus::generate(&spec, 200, 2)?;
    let v = spec.vocabularies();
    println!("train {} dev {} test {}", corpus.train.len(), corpus.dev.len(), corpus.test.len());
    for ex in corpus.train.iter().take(3) {
        println!("transcript  {}", v.source.render(ex.transcript.body()));
        println!("acoustic    {}", v.acoustic.render(ex.acoustic.body()));
        println!("translation {}", v.target.render(ex.translation.body()));
        println!();
    }
    let noise = NoiseChannelConfig {
        p_sub: 0.3,
        p_del: 0.03,
        p_ins: 0.02,
        seed: 3,
    };
    let noisy = corrupt_transcript(&corpus.train[0].transcript, &v.source, &noise)?;
    println!("noisy transcript {} (expected WER {:.2})", v.source.render(noisy.body()), noise.expected_wer());
    Ok(())
}

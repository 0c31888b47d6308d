//! Deterministic random-program generators for differential testing.
//!
//! Callers seed their own RNG (the test suites and the CLI use ChaCha8 with
//! an explicit seed), so a corpus is reproducible from `(seed, count)` plus
//! the bound parameters.

use rand::Rng;

use crate::syntax::{parse_instruction, BasicCore, Dialect, PrimitiveInstruction, SourceProgram};

const EXTERNALS: [(&str, &str); 3] = [("a", "m"), ("b", "n"), ("stdin", "getb")];

fn random_polarity(rng: &mut impl Rng, core: BasicCore) -> PrimitiveInstruction {
    match rng.gen_range(0..3) {
        0 => PrimitiveInstruction::Plain(core),
        1 => PrimitiveInstruction::PosTest(core),
        _ => PrimitiveInstruction::NegTest(core),
    }
}

fn random_external(rng: &mut impl Rng) -> BasicCore {
    let (focus, method) = EXTERNALS[rng.gen_range(0..EXTERNALS.len())];
    BasicCore::plain(focus, method)
}

/// One of three proto templates, all referencing only registers in
/// `[1..=maxr]`: a check over every register, a single-register probe, and
/// a proto mixing an active with a neutral constant.
fn random_proto(rng: &mut impl Rng, maxr: u32) -> BasicCore {
    let text = match rng.gen_range(0..3) {
        0 => {
            let actives: Vec<String> = (1..=maxr).map(|i| format!("*{i}")).collect();
            format!("f.chk:{}", actives.join(":"))
        }
        1 => format!("g.v:*{maxr}"),
        _ => "h.w:*1:9".to_string(),
    };
    match parse_instruction(&text, Dialect::Pglddii).expect("template is valid") {
        PrimitiveInstruction::Plain(core) => core,
        _ => unreachable!("templates are plain instructions"),
    }
}

/// Draw a PGLDdii program suitable for comparing the two semantics routes:
/// length in `[1..=max_len]`, jump targets in `[0..=len+2]`, and actions
/// drawn from a small pool of externals, register writes under focus
/// `rfdt`, and proto-instructions.
///
/// The output stays inside the domain where the routes agree:
///
/// * methods of the plain register file (focus `rf`) and non-write methods
///   under `rfdt` are never produced — the expansion route owns those names
///   for its dispatch code, so a source program using them could observe
///   the difference between the routes;
/// * a proto-instruction is never placed directly after a test, since a
///   test's skipping branch would enter the proto's dispatch block (see
///   [`expansion_skip_hazards`](crate::projections::expansion_skip_hazards)).
pub fn random_pglddii(rng: &mut impl Rng, max_len: usize, maxr: u32, maxn: u32) -> SourceProgram {
    let len = rng.gen_range(1..=max_len.max(1));
    let mut instructions = Vec::with_capacity(len);
    let mut after_test = false;
    for _ in 0..len {
        let kinds = if after_test { 3 } else { 4 };
        let instr = match rng.gen_range(0..kinds) {
            0 => PrimitiveInstruction::AbsJump(rng.gen_range(0..=len + 2)),
            1 => {
                // Mostly register writes, plus the odd unknown method so
                // the blocking path is exercised (it blocks on both
                // routes, so it stays inside the agreement domain).
                let core = if rng.gen_range(0..5) == 0 {
                    BasicCore::plain("rfdt", "junk")
                } else {
                    BasicCore::plain(
                        "rfdt",
                        &format!(
                            "set:{}:{}",
                            rng.gen_range(1..=maxr),
                            rng.gen_range(0..=maxn)
                        ),
                    )
                };
                random_polarity(rng, core)
            }
            2 => {
                let core = random_external(rng);
                random_polarity(rng, core)
            }
            _ => {
                let core = random_proto(rng, maxr);
                random_polarity(rng, core)
            }
        };
        after_test = matches!(
            instr,
            PrimitiveInstruction::PosTest(_) | PrimitiveInstruction::NegTest(_)
        );
        instructions.push(instr);
    }
    SourceProgram::new(Dialect::Pglddii, instructions).expect("generated program is admissible")
}

/// Draw a PGLD program for the trace oracle: externals, absolute jumps, and
/// register-file calls under focus `rf`, including the occasional unknown
/// method so the blocking path is exercised.
pub fn random_pgld(rng: &mut impl Rng, max_len: usize, maxr: u32, maxn: u32) -> SourceProgram {
    let len = rng.gen_range(1..=max_len.max(1));
    let mut instructions = Vec::with_capacity(len);
    for _ in 0..len {
        instructions.push(match rng.gen_range(0..4) {
            0 => PrimitiveInstruction::AbsJump(rng.gen_range(0..=len + 2)),
            1 => {
                let core = random_external(rng);
                random_polarity(rng, core)
            }
            2 => {
                let core = BasicCore::plain(
                    "rf",
                    &format!(
                        "set:{}:{}",
                        rng.gen_range(1..=maxr),
                        rng.gen_range(0..=maxn)
                    ),
                );
                random_polarity(rng, core)
            }
            _ => {
                let core = if rng.gen_range(0..5) == 0 {
                    BasicCore::plain("rf", "junk")
                } else {
                    BasicCore::plain(
                        "rf",
                        &format!("eq:{}:{}", rng.gen_range(1..=maxr), rng.gen_range(0..=maxn)),
                    )
                };
                random_polarity(rng, core)
            }
        });
    }
    SourceProgram::new(Dialect::Pgld, instructions).expect("generated program is admissible")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pga::{canonicalize, interpret_trace, walk_thread, ServiceEnv};
    use crate::projections::{
        pgld_behaviour, pgld_to_pga, pglddii_behaviour, pglddii_behaviour_alt, ProjectionConfig,
    };
    use crate::services::{RfConfig, ServiceDescription};
    use crate::syntax::render_program;
    use crate::threads::{apply_use, bisim_equal, DEFAULT_PRODUCT_LIMIT};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generation_is_deterministic() {
        let a = render_program(&random_pglddii(&mut ChaCha8Rng::seed_from_u64(7), 10, 2, 2));
        let b = render_program(&random_pglddii(&mut ChaCha8Rng::seed_from_u64(7), 10, 2, 2));
        assert_eq!(a, b);
        let c = render_program(&random_pglddii(&mut ChaCha8Rng::seed_from_u64(8), 10, 2, 2));
        assert_ne!(a, c, "different seeds should give different corpora");
    }

    #[test]
    fn generated_pglddii_respects_its_contract() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let p = random_pglddii(&mut rng, 10, 2, 2);
            let len = p.len();
            assert!((1..=10).contains(&len));
            assert!(crate::projections::expansion_skip_hazards(&p).is_empty());
            for u in p.instructions() {
                if let PrimitiveInstruction::AbsJump(l) = u {
                    assert!(*l <= len + 2);
                }
                if let Some(core) = u.core() {
                    assert_ne!(core.focus, "rf");
                    if core.focus == "rfdt" {
                        let m = core.method.render();
                        assert!(m == "junk" || m.starts_with("set:"));
                    }
                    if core.is_proto_instruction() {
                        let registers = match &core.method {
                            crate::syntax::MethodExpr::Proto(m) => m.registers(),
                            _ => unreachable!(),
                        };
                        assert!(registers.iter().all(|r| (1..=2).contains(r)));
                    }
                }
            }
        }
    }

    #[test]
    fn generated_pgld_uses_only_known_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut saw_junk = false;
        for _ in 0..100 {
            let p = random_pgld(&mut rng, 10, 2, 2);
            for u in p.instructions() {
                if let Some(core) = u.core() {
                    if core.focus == "rf" {
                        let m = core.method.render();
                        saw_junk |= m == "junk";
                        assert!(
                            m == "junk" || m.starts_with("set:") || m.starts_with("eq:"),
                            "unexpected register-file method {m}"
                        );
                    }
                }
            }
        }
        assert!(saw_junk, "the corpus should exercise the blocking path");
    }

    #[test]
    fn rendering_round_trips_through_the_parser() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let p = random_pglddii(&mut rng, 10, 2, 2);
            let reparsed = crate::syntax::parse_program(&render_program(&p), p.dialect()).unwrap();
            assert_eq!(p, reparsed);
            let p = random_pgld(&mut rng, 10, 2, 2);
            let reparsed = crate::syntax::parse_program(&render_program(&p), p.dialect()).unwrap();
            assert_eq!(p, reparsed);
        }
    }

    #[test]
    fn routes_agree_on_a_seeded_corpus() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cfg = ProjectionConfig::new(2, 2).unwrap();
        for i in 0..25 {
            let p = random_pglddii(&mut rng, 8, 2, 2);
            let standard = pglddii_behaviour(&p, &cfg).unwrap();
            let alt = pglddii_behaviour_alt(&p, &cfg).unwrap();
            assert!(
                bisim_equal(&standard, &alt),
                "routes disagree on corpus program {i}:\n{}",
                render_program(&p)
            );
        }
    }

    #[test]
    fn interpreter_and_thread_walk_agree_on_a_seeded_corpus() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for i in 0..50 {
            let p = random_pgld(&mut rng, 10, 2, 2);
            let replies: Vec<bool> = (0..20).map(|_| rng.gen_bool(0.5)).collect();

            let env = ServiceEnv::new().with("rf", Box::new(RfConfig::new(2, 2).unwrap()));
            let direct =
                interpret_trace(&canonicalize(&pgld_to_pga(&p).unwrap()), &env, &replies, 20);

            let svc = RfConfig::new(2, 2).unwrap();
            let composed = apply_use(
                &pgld_behaviour(&p).unwrap(),
                "rf",
                &svc,
                &svc.initial_state(),
                DEFAULT_PRODUCT_LIMIT,
            )
            .unwrap()
            .abstract_tau();
            let walked = walk_thread(&composed, &replies, 20);

            assert_eq!(
                direct,
                walked,
                "trace mismatch on corpus program {i}:\n{}",
                render_program(&p)
            );
        }
    }
}

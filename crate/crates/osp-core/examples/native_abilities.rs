//! Driving the engine directly from Rust, without the scripting layer:
//! declare archetypes, attach a closure-backed ability, build a small
//! graph, and spawn a walker across it.

use std::error::Error;
use std::sync::Arc;

use osp_core::{
    AbilityDef, ArchetypeKind, Direction, Engine, FieldDef, Flow, Phase, Registry, SpawnTarget,
    Value, ValueKind, VisitTarget,
};

fn main() -> Result<(), Box<dyn Error>> {
    let mut reg = Registry::new();
    let city = reg.add_archetype("City", ArchetypeKind::Node, None)?;
    let road = reg.add_archetype("Road", ArchetypeKind::Edge, None)?;
    let tourist = reg.add_archetype("Tourist", ArchetypeKind::Walker, None)?;
    reg.add_field(city, FieldDef::new("name", ValueKind::Str))?;

    // On every City the tourist enters: report the name, then head out
    // along all outgoing roads (appended to the walker's FIFO queue).
    reg.add_ability(
        tourist,
        AbilityDef::from_fn("admire", city, Phase::Entry, |engine, inv| {
            let name = engine.state().get_prop(inv.location, "name")?.render();
            engine.report(inv.walker, format!("visited {name}"));
            let roads = engine.state().edges_at(inv.location, Direction::Out, None)?;
            for road in roads {
                engine.visit(inv.walker, VisitTarget::Edge(road))?;
            }
            Ok(Flow::Continue)
        }),
    )?;

    let mut engine = Engine::new(Arc::new(reg));
    let mk_city = |engine: &mut Engine, name: &str| {
        engine
            .state_mut()
            .create_object(city, vec![("name".into(), Value::Str(name.into()))])
    };
    let a = mk_city(&mut engine, "Aria")?;
    let b = mk_city(&mut engine, "Brant")?;
    let c = mk_city(&mut engine, "Corwen")?;
    engine.state_mut().create_edge(road, a, b, vec![])?;
    engine.state_mut().create_edge(road, b, c, vec![])?;

    let w = engine.state_mut().create_object(tourist, vec![])?;
    // Spawning is synchronous: this returns once the walker's queue is
    // exhausted and it comes to rest.
    engine.spawn(w, SpawnTarget::Node(a))?;

    println!("--- reports ---");
    for line in engine.reports() {
        println!("{line}");
    }
    println!("--- trace ---");
    print!("{}", engine.trace_text());
    println!("--- snapshot ---");
    print!("{}", engine.state().snapshot());
    Ok(())
}

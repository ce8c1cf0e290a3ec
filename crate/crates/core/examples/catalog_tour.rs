// Walks the shipped catalog: the phase cycle, the strategies under each
// phase, the widgets that support a strategy and a category search.

use ple_core::{Catalog, Category, EntityRef};

pub fn main() {
    let catalog = Catalog::default_catalog();
    for &phase in catalog.phases() {
        let strategies: Vec<&str> = catalog.strategies_in(phase).map(|s| s.name.as_str()).collect();
        println!("{:<10} {}", catalog.phase_name(phase), strategies.join(", "));
    }

    let organisation = EntityRef::Strategy("organisation".into());
    let techniques = catalog.techniques_under(&organisation).expect("known strategy");
    println!("\norganisation techniques: {}", techniques.into_iter().collect::<Vec<_>>().join(", "));
    for w in catalog.widgets_for(&organisation).expect("known strategy") {
        println!("  {:<24} {}", w.id, w.title);
    }

    println!("\ncategories and the phases they serve:");
    for (category, phases) in catalog.categories() {
        let phases: Vec<&str> = phases.iter().map(|p| p.as_str()).collect();
        println!("  {:<28} {}", category.label(), phases.join(" "));
    }

    let hits = catalog.search_widgets("map", Some(Category::PlanAndOrganize));
    println!("\nsearch \"map\" in Plan & Organize: {:?}", hits.iter().map(|w| &w.id).collect::<Vec<_>>());
}

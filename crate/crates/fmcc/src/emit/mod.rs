//! Output backends: canonical JSON, DOT diagrams, and the narrative of
//! events.

mod dot;
mod json;
mod narrate;

pub use dot::{to_dot, RenderOptions, Style};
pub use json::{from_json, to_json, SchemaError, SCHEMA_VERSION};
pub use narrate::narrate;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compile::{compile, CompileOptions};
    use crate::fm::validate;
    use crate::frontend::parse;
    use crate::sim::{simulate, InputScript, SimLimits};

    const WELCOME: &str =
        "int main()\n{\n  std::cout << \"Welcome to C++!\\n\";\n  return 0;\n}\n";

    const SUM: &str = r#"
int main()
{
  int integer1;
  int integer2;
  int sum;
  std::cin >> integer1;
  std::cin >> integer2;
  sum = integer1 + integer2;
  std::cout << "Sum is " << sum << std::endl;
  return 0;
}
"#;

    fn compiled(src: &str) -> crate::fm::FmGraph {
        compile(&parse(src).unwrap(), &CompileOptions::default())
    }

    #[test]
    fn json_round_trip_is_structural_identity() {
        for src in [WELCOME, SUM, "int main(){return 0;}"] {
            let graph = compiled(src);
            let text = to_json(&graph);
            let back = from_json(&text).unwrap();
            assert_eq!(graph, back);
            assert_eq!(validate(&back), vec![]);
            assert_eq!(to_json(&back), text);
        }
    }

    #[test]
    fn json_output_is_byte_stable() {
        let graph = compiled(SUM);
        assert_eq!(to_json(&graph), to_json(&graph));
    }

    #[test]
    fn bad_stage_name_reports_its_path() {
        let graph = compiled(WELCOME);
        let text = to_json(&graph).replace("\"Release\"", "\"Relesae\"");
        let err = from_json(&text).unwrap_err();
        assert!(err.path.contains("flowsystems") || err.path.contains("flow_arcs"), "{}", err);
    }

    #[test]
    fn version_mismatch_is_a_schema_error() {
        let graph = compiled(WELCOME);
        let text = to_json(&graph).replacen("\"version\": \"1\"", "\"version\": \"9\"", 1);
        let err = from_json(&text).unwrap_err();
        assert_eq!(err.path, "version");
    }

    #[test]
    fn dangling_arcs_load_and_fail_validation_not_parsing() {
        let mut graph = compiled(WELCOME);
        graph.flow_arcs[0].to.flowsystem = crate::fm::FlowsystemId::new("nowhere");
        let text = to_json(&graph);
        let back = from_json(&text).unwrap();
        assert!(!validate(&back).is_empty());
    }

    #[test]
    fn welcome_dot_has_expected_cluster_and_trigger_counts() {
        let graph = compiled(WELCOME);
        let dot = to_dot(&graph, &RenderOptions::default());
        let spheres = graph.spheres.len();
        let sphere_clusters = dot.matches("subgraph cluster_s_").count();
        assert_eq!(sphere_clusters, spheres);
        let dashed = dot.matches("style=dashed").count();
        assert_eq!(dashed, graph.trigger_arcs.len());
        assert_eq!(dashed, 2, "start trigger and statement sequencing");
    }

    #[test]
    fn hiding_triggers_removes_every_dashed_edge() {
        let graph = compiled(SUM);
        let options = RenderOptions { show_triggers: false, ..Default::default() };
        let dot = to_dot(&graph, &options);
        assert_eq!(dot.matches("style=dashed").count(), 0);
    }

    #[test]
    fn simplified_style_draws_comparison_diamonds() {
        let graph = compiled(
            "int main(){int a;std::cin >> a;if (a == 1)\n{\n  std::cout << a;\n}\nreturn 0;}",
        );
        let options = RenderOptions { style: Style::Simplified, ..Default::default() };
        let dot = to_dot(&graph, &options);
        assert!(dot.contains("shape=diamond"));
        assert!(dot.contains("a == 1"));
        let full = to_dot(&graph, &RenderOptions::default());
        assert!(!full.contains("shape=diamond"));
    }

    #[test]
    fn dot_is_deterministic_and_brace_balanced() {
        let graph = compiled(SUM);
        let dot = to_dot(&graph, &RenderOptions::default());
        assert_eq!(dot, to_dot(&graph, &RenderOptions::default()));
        assert_eq!(dot.matches('{').count(), dot.matches('}').count());
    }

    #[test]
    fn collapsed_spheres_render_one_box() {
        let graph = crate::transform::collapse_single(&compiled(WELCOME));
        let dot = to_dot(&graph, &RenderOptions::default());
        // The return statement sphere merged with its flowsystem.
        assert!(!dot.contains("cluster_s_computer_main_statements_s2"));
        assert!(dot.contains("Statement 2: 0"));
        let unmerged =
            to_dot(&graph, &RenderOptions { honor_collapse: false, ..Default::default() });
        assert!(unmerged.contains("cluster_s_computer_main_statements_s2"));
    }

    #[test]
    fn static_narrative_has_one_line_per_arc() {
        for src in [WELCOME, SUM, "int main(){return 0;}"] {
            let graph = compiled(src);
            let text = narrate(&graph, None);
            let expected = graph.flow_arcs.len() + graph.trigger_arcs.len();
            assert_eq!(text.lines().count(), expected, "{}", src);
        }
    }

    #[test]
    fn minimal_narrative_speaks_only_of_os_and_return() {
        let graph = compiled("int main(){return 0;}");
        let text = narrate(&graph, None);
        for line in text.lines() {
            assert!(
                line.contains("Operating system") || line.contains("return code"),
                "{}",
                line
            );
        }
    }

    #[test]
    fn dynamic_narrative_reports_the_alu_application() {
        let graph = compiled(SUM);
        let trace =
            simulate(&graph, &InputScript::new([3, 4]), &SimLimits::default()).unwrap();
        let text = narrate(&graph, Some(&trace));
        assert!(text.contains("ALU processes 3 + 4, triggering creation of 7"));
        assert!(text.contains("Memory location sum now holds 7."));
    }
}

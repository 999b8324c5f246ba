import logging

from zdflow import (
    finder,
    flow,
    graph,
    logs,
    oracle,
    pattern,
    sim,
    utils,
)

logger = logging.getLogger(__name__)

EXAMPLES = utils.PACKAGE_ROOT / "configs" / "examples"

# examples = ["path.json", "teleport.json", "triangle.json"]
examples = ["path.json", "teleport.json", "line4.json", "triangle.json"]
draws = 5


def demo(name: str) -> None:
    """load -> find -> verify -> pattern -> classify"""
    lg = graph.load_graph(EXAMPLES / name)
    result = finder.find_flow(lg)
    if not result.found:
        logger.info(f"{name}: no flow, stuck on {graph.sort_vertices(result.stuck)}")
        return
    report = flow.validate_flow(lg, result.flow)
    logger.info(f"{name}: depth {result.depth}, valid {report.valid}")
    logger.info(f"\n{flow.format_schedule(flow.schedule_report(lg, result.flow))}")
    p = pattern.from_flow(lg, result.flow)
    logger.info(f"{name}: {pattern.format_pattern(p)}")
    determinism = sim.classify_determinism(lg, flow.corrections(lg, result.flow), draws=draws)
    logger.info(f"{name}: {determinism.verdict.value}")
    if len(lg.vertices) <= utils.get_setting("oracle", "max_vertices"):
        logger.info(f"{name}: oracle {oracle.compare_with_finder(lg)['agreement']}")


if __name__ == "__main__":
    logs.setup_logging()
    # logs.print_logger()
    # finder.run(EXAMPLES / "path.json", batched=False)
    for example in examples:
        demo(example)

"""Demo model: pizzas at three levels of abstraction.

Pizza is the recipe type, Margherita a recipe, Guido's margherita one
physical pizza. Toppings resolve strictly: the physical pizza links fresh
per-pizza instances of Mozzarella and Tomato sauce, never the catalogue
entities themselves.
"""

from __future__ import annotations

from .kernel import ModelGraph
from .builtins import ensure_builtins
from .templates import _attr_value

DEMO_COUNTER_BASE = 1003684


def build_pizza_fixture(model: ModelGraph) -> dict[str, int]:
    """Seed the demo entities; returns a name -> id map of everything created."""
    model.counter = max(model.counter, DEMO_COUNTER_BASE)

    ids: dict[str, int] = {}
    ids["Topping"] = model.add_entity("topping", "Topping", "Root type for pizza toppings")
    ids["Spice"] = model.add_entity("spice", "Spice", "Root type for pizza spices")
    ids["Pizza"] = model.add_entity("pizza", "Pizza", "A pizza recipe type")

    ids["toppings"] = model.declare_reference(
        ids["Pizza"], "toppings", potency=2, ordered=False,
        min_card=0, max_card=None, type_targets=(ids["Topping"],))
    ids["extra toppings"] = model.declare_reference(
        ids["Pizza"], "extra toppings", potency=2, ordered=False,
        min_card=0, max_card=None, type_targets=(ids["Topping"],))
    ids["spices"] = model.declare_reference(
        ids["Pizza"], "spices", potency=2, ordered=False,
        min_card=0, max_card=None, type_targets=(ids["Spice"],))
    ids["energy content"] = model.declare_attribute(
        ids["Pizza"], "energy content", "decimal", 1)

    ids["Mozzarella"] = model.add_entity("mozzarella", "Mozzarella", "")
    model.assert_instance_of(ids["Mozzarella"], ids["Topping"])
    ids["Tomato sauce"] = model.add_entity("tomato_sauce", "Tomato sauce", "")
    model.assert_instance_of(ids["Tomato sauce"], ids["Topping"])
    ids["Garlic"] = model.add_entity("garlic", "Garlic", "")
    model.assert_instance_of(ids["Garlic"], ids["Spice"])
    ids["Oregano"] = model.add_entity("oregano", "Oregano", "")
    model.assert_instance_of(ids["Oregano"], ids["Spice"])

    ids["Margherita"] = model.instantiate(
        ids["Pizza"], "margherita", "Margherita", "A classic pizza recipe")
    margherita_refs = {d.name: d.id for d in model.own_references(ids["Margherita"])}
    ids["Margherita.toppings"] = margherita_refs["toppings"]
    ids["Margherita.extra toppings"] = margherita_refs["extra toppings"]
    ids["Margherita.spices"] = margherita_refs["spices"]
    model.link_target(ids["Margherita"], margherita_refs["toppings"], ids["Mozzarella"])
    model.link_target(ids["Margherita"], margherita_refs["toppings"], ids["Tomato sauce"])
    model.link_target(ids["Margherita"], margherita_refs["extra toppings"], ids["Mozzarella"])
    model.link_target(ids["Margherita"], margherita_refs["extra toppings"], ids["Tomato sauce"])
    model.link_target(ids["Margherita"], margherita_refs["spices"], ids["Garlic"])
    model.link_target(ids["Margherita"], margherita_refs["spices"], ids["Oregano"])
    model.assign_value(ids["Margherita"], ids["energy content"], "890")

    ids["Guido's margherita"] = model.instantiate(
        ids["Margherita"], "guidos_margherita", "Guido's margherita", "A physical pizza")
    ids["Guido's mozzarella"] = model.instantiate(
        ids["Mozzarella"], "guidos_mozzarella", "Guido's mozzarella")
    ids["Guido's tomato sauce"] = model.instantiate(
        ids["Tomato sauce"], "guidos_tomato_sauce", "Guido's tomato sauce")
    model.link_target(ids["Guido's margherita"], margherita_refs["toppings"],
                      ids["Guido's mozzarella"])
    model.link_target(ids["Guido's margherita"], margherita_refs["toppings"],
                      ids["Guido's tomato sauce"])
    return ids


# The nine named demo entities whose facet documents are pinned by golden files.
DEMO_ENTITY_NAMES = (
    "Topping", "Spice", "Pizza", "Mozzarella", "Tomato sauce",
    "Garlic", "Oregano", "Margherita", "Guido's margherita",
)


def build_markdown_conversion(model: ModelGraph) -> dict[str, int]:
    """A conversion rendering a pizza as Markdown, plus its pattern entities."""
    builtin = ensure_builtins(model)
    ids: dict[str, int] = {}

    pattern_kind = model.add_entity("pattern_kind", "Pattern", "Named text template")
    model.declare_attribute(pattern_kind, "name", "string", 1)
    model.declare_attribute(pattern_kind, "template", "string", 1)
    ids["PatternKind"] = pattern_kind

    conversion_kind = model.add_entity("conversion_kind", "Conversion", "")
    model.declare_attribute(conversion_kind, "output_media", "string", 1)
    ids["ConversionKind"] = conversion_kind

    def make_pattern(identifier: str, name: str, template: str) -> int:
        pid = model.instantiate(pattern_kind, identifier, name)
        name_decl = next(d for d in model.own_attributes(pattern_kind) if d.name == "name")
        template_decl = next(d for d in model.own_attributes(pattern_kind)
                             if d.name == "template")
        model.assign_value(pid, name_decl.id, name)
        model.assign_value(pid, template_decl.id, template)
        return pid

    root = make_pattern("pizza_doc", "pizza_doc",
                        "## ${field:name}\nToppings: ${ref:toppings:topping_line:, }\n")
    line = make_pattern("topping_line", "topping_line", "${field:name}")
    ids["pizza_doc"] = root
    ids["topping_line"] = line

    conv = model.instantiate(builtin["function"], "pizza_markdown", "Pizza to Markdown")
    model.assert_instance_of(conv, conversion_kind)
    media_decl = next(d for d in model.own_attributes(conversion_kind)
                      if d.name == "output_media")
    model.assign_value(conv, media_decl.id, "text/markdown")
    patterns_ref = model.declare_reference(conv, "patterns", potency=1, ordered=False,
                                           min_card=0, max_card=None)
    root_ref = model.declare_reference(conv, "root_pattern", potency=1, ordered=False,
                                       min_card=1, max_card=1)
    model.link_target(conv, patterns_ref, root)
    model.link_target(conv, patterns_ref, line)
    model.link_target(conv, root_ref, root)
    ids["conversion"] = conv
    return ids


__all__ = ["build_pizza_fixture", "build_markdown_conversion",
           "DEMO_ENTITY_NAMES", "DEMO_COUNTER_BASE", "_attr_value"]

import pytest

from formgraph.dom import (
    DomTree,
    ElementKind,
    classify_nodes,
    extract_form_model,
    parse_document,
    serialize_tree,
    tree_to_json,
)
from formgraph.errors import EmptyDocument, NoFormFound, NoInputFields


def tags(tree):
    return [n.tag for n in tree.walk()]


class TestParseDocument:
    def test_label_and_input(self):
        tree = parse_document('<form><label for="a">From 1</label><input id="a" type="text"></form>')
        assert tags(tree) == ["form", "label", "input"]
        label = next(n for n in tree.walk() if n.tag == "label")
        assert label.text == "From 1"

    def test_empty_document(self):
        with pytest.raises(EmptyDocument):
            parse_document("")

    def test_unclosed_span_recovers_like_a_browser(self):
        # browsers keep the span *inside* the div and close both at </div>
        tree = parse_document('<div><input type="text"><span>hint</div>')
        assert tags(tree) == ["div", "input", "span"]
        root = tree.node(tree.root)
        assert root.tag == "div"
        children = [tree.node(c).tag for c in root.children]
        assert children == ["input", "span"]
        span = next(n for n in tree.walk() if n.tag == "span")
        assert span.text == "hint"

    def test_accepts_bytes(self):
        tree = parse_document(b"<p>hello</p>")
        assert tags(tree) == ["p"]

    def test_stray_end_tag_ignored(self):
        tree = parse_document("<div></span><p>x</p></div>")
        assert tags(tree) == ["div", "p"]

    def test_doc_order_unique_and_contiguous(self, travel_tree):
        orders = sorted(n.doc_order for n in travel_tree.walk())
        assert orders == list(range(len(orders)))

    def test_children_form_a_tree(self, travel_tree):
        seen = set()
        for node in travel_tree.walk():
            for child in node.children:
                assert child not in seen  # single parent
                seen.add(child)

    def test_whitespace_normalized(self):
        tree = parse_document("<p>  a\n\t b  </p>")
        assert tree.node(tree.root).text == "a b"

    def test_multiple_top_level_elements_get_synthetic_root(self):
        tree = parse_document("<p>a</p><p>b</p>")
        assert tree.node(tree.root).tag == "#document"
        assert tags(tree) == ["#document", "p", "p"]

    def test_script_text_skipped(self):
        tree = parse_document("<div><script>var x = 1;</script><span>ok</span></div>")
        script = next(n for n in tree.walk() if n.tag == "script")
        assert script.text == ""


class TestClassifyNodes:
    def test_text_input_is_input_field(self):
        tree = parse_document('<input type="text">')
        kinds = classify_nodes(tree)
        assert kinds[tree.root] is ElementKind.INPUT_FIELD

    def test_span_text_div_container(self):
        tree = parse_document("<div><span>From 1</span></div>")
        kinds = classify_nodes(tree)
        div = tree.node(tree.root)
        span = div.children[0]
        assert kinds[div.id] is ElementKind.CONTAINER
        assert kinds[span] is ElementKind.TEXT_ELEMENT

    def test_checkbox_is_container(self):
        tree = parse_document('<input type="checkbox">')
        assert classify_nodes(tree)[tree.root] is ElementKind.CONTAINER

    def test_textarea_is_input_field(self):
        tree = parse_document("<textarea>preset</textarea>")
        assert classify_nodes(tree)[tree.root] is ElementKind.INPUT_FIELD

    def test_untyped_input_defaults_to_text(self):
        tree = parse_document("<input>")
        assert classify_nodes(tree)[tree.root] is ElementKind.INPUT_FIELD

    def test_partition_is_total(self, travel_tree):
        kinds = classify_nodes(travel_tree)
        assert set(kinds) == {n.id for n in travel_tree.walk()}

    def test_mixed_node_contributes_own_text(self):
        tree = parse_document("<div>own text<span>nested</span></div>")
        kinds = classify_nodes(tree)
        div = tree.node(tree.root)
        assert kinds[div.id] is ElementKind.TEXT_ELEMENT
        assert kinds[div.children[0]] is ElementKind.TEXT_ELEMENT


class TestExtractFormModel:
    def test_travel_fixture_has_six_fields(self, travel_tree):
        model = extract_form_model(travel_tree)
        assert len(model.fields) == 6
        labels = list(model.context.labels)
        for expected in ["From 1", "To 1", "Travel dates 1", "From 2", "To 2", "Travel dates 2"]:
            assert expected in labels

    def test_submit_button_only_form(self):
        tree = parse_document('<form><button type="submit">Go</button></form>')
        with pytest.raises(NoInputFields):
            extract_form_model(tree)

    def test_selector_picks_second_form(self):
        html = (
            '<html><body>'
            '<form id="one"><input type="text" name="a"></form>'
            '<form id="two"><input type="text" name="b"></form>'
            "</body></html>"
        )
        tree = parse_document(html)
        model = extract_form_model(tree, "#two")
        assert model.fields[0].name_attrs["name"] == "b"
        model_by_index = extract_form_model(tree, "1")
        assert model_by_index.form_node == model.form_node

    def test_unmatched_selector(self):
        tree = parse_document('<form id="one"><input type="text"></form>')
        with pytest.raises(NoFormFound):
            extract_form_model(tree, "#missing")

    def test_root_fallback_without_form(self):
        tree = parse_document('<div><label>Name</label><input type="text" name="n"></div>')
        model = extract_form_model(tree)
        assert model.form_node == tree.root
        assert len(model.fields) == 1

    def test_fields_in_document_order(self, travel_tree):
        model = extract_form_model(travel_tree)
        orders = [travel_tree.node(f.node).doc_order for f in model.fields]
        assert orders == sorted(orders)

    def test_context_from_title_and_meta(self, travel_model):
        assert travel_model.context.app_title == "Multi-city flight search"
        assert "two connected flights" in travel_model.context.app_description


class TestSerialization:
    def test_reparse_is_isomorphic(self, travel_tree):
        def shape(tree, node_id):
            node = tree.node(node_id)
            return (
                node.tag,
                tuple(sorted(node.attributes.items())),
                node.text,
                tuple(shape(tree, c) for c in node.children),
            )

        rendered = serialize_tree(travel_tree)
        reparsed = parse_document(rendered)
        assert shape(travel_tree, travel_tree.root) == shape(reparsed, reparsed.root)

    def test_json_dump_fields(self, travel_tree):
        import json

        entries = json.loads(tree_to_json(travel_tree))
        assert {"id", "tag", "kind", "doc_order", "text"} <= set(entries[0])
        assert len(entries) == len(travel_tree.nodes)

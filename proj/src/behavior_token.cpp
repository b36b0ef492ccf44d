#include "kitbt/vocabulary.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace kitbt {

parsed_behavior parse_behavior(std::string_view text) {
    parsed_behavior out;
    const auto open = text.find('(');
    if (open == std::string_view::npos) {
        out.name = std::string(text);
        return out;
    }
    if (text.back() != ')') {
        throw unknown_behavior(std::string(text));
    }
    out.name = std::string(text.substr(0, open));
    std::string_view inner = text.substr(open + 1, text.size() - open - 2);
    while (!inner.empty()) {
        const auto comma = inner.find(',');
        out.args.emplace_back(inner.substr(0, comma));
        if (comma == std::string_view::npos) {
            break;
        }
        inner.remove_prefix(comma + 1);
    }
    return out;
}

std::string format_number(double value) {
    if (value == 0.0) {
        value = 0.0; // drops the sign of -0
    }
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc{}) {
        throw std::runtime_error("cannot format number");
    }
    return std::string(buf, end);
}

double parse_number(std::string_view text) {
    double value = 0.0;
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || end != text.data() + text.size() || !std::isfinite(value)) {
        throw std::invalid_argument("not a number: '" + std::string(text) + "'");
    }
    return value;
}

std::string format_position(const vec3& p) {
    return format_number(p.x()) + "," + format_number(p.y()) + "," + format_number(p.z());
}

namespace vocab {

namespace {

std::string with_target(std::string_view name, std::string_view object, std::string_view frame, const vec3& p) {
    std::string out(name);
    out += "(";
    out += object;
    out += ",";
    out += frame;
    out += ",";
    out += format_position(p);
    out += ")";
    return out;
}

std::string with_object(std::string_view name, std::string_view object) {
    return std::string(name) + "(" + std::string(object) + ")";
}

} // namespace

std::string at_text(std::string_view object, std::string_view frame, const vec3& position) {
    return with_target(at, object, frame, position);
}
std::string holding_text(std::string_view object) { return with_object(holding, object); }
std::string pick_text(std::string_view object) { return with_object(pick, object); }
std::string place_text(std::string_view object, std::string_view frame, const vec3& position) {
    return with_target(place, object, frame, position);
}
std::string pickplace_text(std::string_view object, std::string_view frame, const vec3& position) {
    return with_target(pickplace, object, frame, position);
}

node pick_place_subtree(std::string_view object, std::string_view frame, const vec3& position) {
    node grasp = node::fallback({
        node::condition(holding_text(object)),
        node::sequence({node::condition(std::string(gripper_empty)), node::action(pick_text(object))}),
    });
    return node::fallback({
        node::condition(at_text(object, frame, position)),
        node::sequence({std::move(grasp), node::action(place_text(object, frame, position))}),
    });
}

} // namespace vocab

} // namespace kitbt

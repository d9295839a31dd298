#include "semgap/task.hpp"

#include "semgap/error.hpp"

namespace semgap {

std::string_view to_string(Task task) {
    switch (task) {
        case Task::Wic: return "wic";
        case Task::Ner: return "ner";
        case Task::Analogy: return "analogy";
    }
    return "?";
}

std::string_view to_string(ModelFamily family) {
    switch (family) {
        case ModelFamily::Encoder: return "encoder";
        case ModelFamily::Decoder: return "decoder";
        case ModelFamily::EncoderDecoder: return "encoder-decoder";
    }
    return "?";
}

std::string_view to_string(Method method) { return method == Method::Query ? "query" : "probe"; }

Task parse_task(std::string_view name) {
    if (name == "wic") return Task::Wic;
    if (name == "ner") return Task::Ner;
    if (name == "analogy") return Task::Analogy;
    throw InvalidArgument("unknown task '" + std::string(name) + "'");
}

ModelFamily parse_family(std::string_view name) {
    if (name == "encoder") return ModelFamily::Encoder;
    if (name == "decoder") return ModelFamily::Decoder;
    if (name == "encoder-decoder") return ModelFamily::EncoderDecoder;
    throw InvalidArgument("unknown model family '" + std::string(name) + "'");
}

Method parse_method(std::string_view name) {
    if (name == "query") return Method::Query;
    if (name == "probe") return Method::Probe;
    throw InvalidArgument("unknown method '" + std::string(name) + "'");
}

}  // namespace semgap

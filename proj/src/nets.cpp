#include "bimodal/nets.hpp"

namespace bimodal::nets {

using nlohmann::json;

json to_json(const AcousticModelSpec& spec) {
  json blocks = json::array();
  for (const auto& b : spec.blocks)
    blocks.push_back({{"filters", b.filters},
                      {"kernel", {b.kernel_h, b.kernel_w}},
                      {"pool", {b.pool_t, b.pool_f}},
                      {"dropout_rate", b.dropout_rate}});
  return {{"blocks", blocks},
          {"dense_sizes", spec.dense_sizes},
          {"num_classes", spec.num_classes},
          {"collapse_pool", spec.collapse_pool == PoolKind::max ? "max" : "average"}};
}

AcousticModelSpec acoustic_spec_from_json(const json& j) {
  AcousticModelSpec spec;
  spec.blocks.clear();
  for (const auto& b : j.at("blocks")) {
    ConvBlockSpec block;
    block.filters = b.at("filters").get<int>();
    block.kernel_h = b.at("kernel").at(0).get<int>();
    block.kernel_w = b.at("kernel").at(1).get<int>();
    block.pool_t = b.at("pool").at(0).get<int>();
    block.pool_f = b.at("pool").at(1).get<int>();
    block.dropout_rate = b.at("dropout_rate").get<double>();
    spec.blocks.push_back(block);
  }
  spec.dense_sizes = j.at("dense_sizes").get<std::vector<int>>();
  spec.num_classes = j.at("num_classes").get<int>();
  if (j.contains("collapse_pool"))
    spec.collapse_pool =
        j.at("collapse_pool").get<std::string>() == "average" ? PoolKind::average : PoolKind::max;
  return spec;
}

json to_json(const TextModelSpec& spec) {
  return {{"conv_filters", spec.conv_filters},
          {"kernel_size", spec.kernel_size},
          {"stride", spec.stride},
          {"lstm_units", spec.lstm_units},
          {"num_classes", spec.num_classes}};
}

TextModelSpec text_spec_from_json(const json& j) {
  TextModelSpec spec;
  spec.conv_filters = j.at("conv_filters").get<std::vector<int>>();
  spec.kernel_size = j.at("kernel_size").get<int>();
  spec.stride = j.at("stride").get<int>();
  spec.lstm_units = j.at("lstm_units").get<int>();
  spec.num_classes = j.at("num_classes").get<int>();
  return spec;
}

}  // namespace bimodal::nets

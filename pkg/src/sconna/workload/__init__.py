from .spec import (LAYER_KINDS, VDP_KINDS, LayerSpec, NetworkSpec, SchemaError,
                   layer_from_dict, load_network, network_from_dict, save_network)
from .conv import (FlatPair, VdpTask, conv_output_oracle, decompose, flatten_layer,
                   layer_forward, split_vectors, tensor_stats)
from .zoo import BUNDLED, load_bundled

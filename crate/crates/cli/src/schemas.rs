//! Published JSON schemas, one per subcommand report. Printed by
//! `malg --schema`; the integration tests validate every JSON report
//! against these.

pub const SCHEMAS: &str = r#"{
  "$comment": "JSON schemas for the malg CLI reports, keyed by subcommand",
  "rational": {
    "type": "string",
    "pattern": "^-?[0-9]+(/[0-9]+)?$"
  },
  "mset": {
    "type": "object",
    "required": ["intervals"],
    "properties": {
      "intervals": {
        "type": "array",
        "items": {"type": "array", "items": {"$ref": "rational"}}
      }
    }
  },
  "iet": {
    "type": "object",
    "required": ["pieces"],
    "properties": {
      "pieces": {
        "type": "array",
        "items": {
          "type": "object",
          "required": ["src", "shift"],
          "properties": {
            "src": {"type": "array", "items": {"$ref": "rational"}},
            "shift": {"$ref": "rational"}
          }
        }
      }
    }
  },
  "typevector": {
    "type": "object",
    "required": ["n", "weights"],
    "properties": {
      "n": {"type": "integer"},
      "weights": {"type": "object", "additionalProperties": {"$ref": "rational"}}
    }
  },
  "eval": {
    "type": "object",
    "required": ["command", "seed", "formula", "depth", "value"],
    "properties": {
      "command": {"type": "string"},
      "seed": {"type": "integer"},
      "formula": {"type": "string"},
      "depth": {"type": "integer"},
      "value": {"$ref": "rational"},
      "free_vars": {"type": "array", "items": {"type": "string"}},
      "modulus": {"type": "object", "additionalProperties": {"$ref": "rational"}},
      "depths": {
        "type": "array",
        "items": {
          "type": "object",
          "required": ["depth", "value"],
          "properties": {"depth": {"type": "integer"}, "value": {"$ref": "rational"}}
        }
      },
      "trend": {"type": "string"},
      "halving": {"type": "boolean"},
      "bounds": {
        "type": "object",
        "required": ["lower", "upper"],
        "properties": {"lower": {"$ref": "rational"}, "upper": {"$ref": "rational"}}
      }
    }
  },
  "type": {
    "type": "object",
    "required": ["command", "seed", "n", "weights"],
    "properties": {
      "command": {"type": "string"},
      "seed": {"type": "integer"},
      "n": {"type": "integer"},
      "weights": {"type": "object", "additionalProperties": {"$ref": "rational"}}
    }
  },
  "dist": {
    "type": "object",
    "required": ["command", "seed", "arity", "distance"],
    "properties": {
      "command": {"type": "string"},
      "seed": {"type": "integer"},
      "arity": {"type": "integer"},
      "distance": {"$ref": "rational"},
      "left_type": {"$ref": "typevector"},
      "right_type": {"$ref": "typevector"}
    }
  },
  "homog": {
    "type": "object",
    "required": ["command", "seed", "mode", "iet", "achieved"],
    "properties": {
      "command": {"type": "string"},
      "seed": {"type": "integer"},
      "mode": {"type": "string"},
      "iet": {"$ref": "iet"},
      "achieved": {"$ref": "rational"},
      "stages": {
        "type": "array",
        "items": {
          "type": "object",
          "required": ["element", "budget", "defect"],
          "properties": {
            "element": {"type": "string"},
            "budget": {"$ref": "rational"},
            "defect": {"$ref": "rational"}
          }
        }
      }
    }
  },
  "backforth": {
    "type": "object",
    "required": ["command", "seed", "structure", "stages", "pairs", "size", "verified"],
    "properties": {
      "command": {"type": "string"},
      "seed": {"type": "integer"},
      "structure": {"type": "string"},
      "stages": {"type": "integer"},
      "pairs": {
        "type": "array",
        "items": {
          "type": "object",
          "required": ["left", "right"],
          "properties": {"left": {"type": "string"}, "right": {"type": "string"}}
        }
      },
      "size": {"type": "integer"},
      "verified": {"type": "boolean"}
    }
  },
  "kesten": {
    "type": "object",
    "required": ["command", "seed", "radius", "lambda_max", "iterations",
                 "min_avg_disp_sq", "min_max_disp", "targets", "lambda_bound_ok",
                 "disp_bound_ok", "tol", "return_probs"],
    "properties": {
      "command": {"type": "string"},
      "seed": {"type": "integer"},
      "radius": {"type": "integer"},
      "lambda_max": {"type": "number"},
      "iterations": {"type": "integer"},
      "min_avg_disp_sq": {"type": "number"},
      "min_max_disp": {"type": "number"},
      "targets": {
        "type": "object",
        "required": ["lambda", "disp_sq", "disp"],
        "properties": {
          "lambda": {"type": "number"},
          "disp_sq": {"type": "number"},
          "disp": {"type": "number"}
        }
      },
      "lambda_bound_ok": {"type": "boolean"},
      "disp_bound_ok": {"type": "boolean"},
      "tol": {"type": "number"},
      "return_probs": {
        "type": "array",
        "items": {
          "type": "object",
          "required": ["steps", "p"],
          "properties": {"steps": {"type": "integer"}, "p": {"$ref": "rational"}}
        }
      },
      "probe_max_disp": {"type": "number"}
    }
  },
  "bernoulli-independence": {
    "type": "object",
    "required": ["command", "seed", "independent", "mu_intersection", "mu_product"],
    "properties": {
      "command": {"type": "string"},
      "seed": {"type": "integer"},
      "independent": {"type": "boolean"},
      "mu_intersection": {"$ref": "rational"},
      "mu_product": {"$ref": "rational"}
    }
  },
  "bernoulli-factorization": {
    "type": "object",
    "required": ["command", "seed", "holds", "joint", "product"],
    "properties": {
      "command": {"type": "string"},
      "seed": {"type": "integer"},
      "holds": {"type": "boolean"},
      "joint": {"$ref": "typevector"},
      "product": {"$ref": "typevector"}
    }
  },
  "bernoulli-generators": {
    "type": "object",
    "required": ["command", "seed", "t1", "t2", "embedding"],
    "properties": {
      "command": {"type": "string"},
      "seed": {"type": "integer"},
      "t1": {"$ref": "iet"},
      "t2": {"$ref": "iet"},
      "embedding": {
        "type": "object",
        "required": ["depth", "coords"],
        "properties": {
          "depth": {"type": "integer"},
          "coords": {"type": "array", "items": {"type": "string"}}
        }
      }
    }
  },
  "net": {
    "type": "object",
    "required": ["command", "seed", "arity", "epsilon", "size", "members"],
    "properties": {
      "command": {"type": "string"},
      "seed": {"type": "integer"},
      "arity": {"type": "integer"},
      "epsilon": {"$ref": "rational"},
      "size": {"type": "integer"},
      "members": {"type": "array", "items": {"$ref": "typevector"}}
    }
  }
}"#;

/// Module ↔ topic table for `--paper-map`.
pub const TOPIC_MAP: &str = "\
module     topic
---------  -----------------------------------------------------------------
malg       exact measure algebra of [0,1): boolean operations, the metric
           d(A,B) = m(A (+) B), interval exchange automorphisms
types      quantifier-free types of tuples, canonical realization, orbit
           distance as exact optimal transport with Hamming cost
homog      automorphism synthesis: partition matching, transport-optimal
           maps, back-and-forth along a dense dyadic schedule
backforth  discrete back-and-forth engine; BIT presentation of the random
           graph and the dense linear order on the rationals
logic      continuous-logic formulas over the measure-algebra signature:
           parser, Lipschitz moduli, exact evaluation on dyadic depths
freegroup  reduced words of the rank-2 free group, Cayley balls, compressed
           Markov operators
kesten     exact return probabilities of the simple random walk and spectral
           certificates converging to sqrt(2-sqrt(3)) = 0.517638090205...
bernoulli  two-generator Bernoulli shift on cylinder sets: independence,
           joint-type factorization, shift generators as dyadic exchanges
";

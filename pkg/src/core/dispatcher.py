# src/core/dispatcher.py

import argparse
import json
import logging
import os
from typing import Any, Dict, List, Mapping, Optional, Tuple

from core.config import RunConfig, config_from_manifest, load_config, parse_tau_grid
from core.errors import ConfigError, DependencyMissingError
from core.tool_registry import ToolRegistry
from services.artifact_store import ArtifactStore
from tools.base_tool import BaseTool, RunContext

logger = logging.getLogger(__name__)

GLOBAL_KEYS = ("config", "replay", "seed", "threads", "tau_grid", "alpha", "output_dir", "data_dir", "verbose",
               "command")


def load_manifest(path: str) -> Dict[str, Any]:
    """
    Raises:
        DependencyMissingError: Si el manifiesto no existe.
        ConfigError: Si no es un JSON legible.
    """
    if not os.path.isfile(path):
        raise DependencyMissingError(f"No se encontró el manifiesto '{path}'.")
    with open(path, "r", encoding="utf-8") as f:
        try:
            manifest = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"Manifiesto ilegible: {e}")
    if not isinstance(manifest, dict):
        raise ConfigError("El manifiesto debe ser un objeto JSON.")
    return manifest


class Dispatcher:
    """
    Traduce la línea de comandos en una herramienta y su contexto de ejecución.

    1. Construye el analizador con las banderas globales y un subcomando por herramienta.
    2. Resuelve la configuración: archivo (o manifiesto en modo replay) y banderas encima.
    3. En modo replay el subcomando y sus opciones salen del manifiesto; las opciones
       escritas explícitamente en la línea de comandos tienen prioridad.
    """

    def __init__(self, tool_registry: ToolRegistry):
        self._registry = tool_registry
        self._subparsers: Dict[str, argparse.ArgumentParser] = {}
        self._parser = self._build_parser()
        logger.info("Dispatcher inicializado.")

    def _build_parser(self) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(
            prog="teps",
            description="Inferencia de preferencias por estabilidad en mercados de asignación escolar.",
        )
        parser.add_argument("--config", help="Archivo clave=valor (por defecto $TEPS_CONFIG).")
        parser.add_argument("--replay", help="Manifiesto de una ejecución previa a repetir; el subcomando es opcional.")
        parser.add_argument("--seed", type=int, help="Semilla maestra.")
        parser.add_argument("--threads", type=int, help="Procesos en paralelo.")
        parser.add_argument("--tau-grid", help="Grilla de τ separada por comas, p. ej. 20,40,60,80,100.")
        parser.add_argument("--alpha", type=float, help="Nivel de significancia de la escalera de Wald.")
        parser.add_argument("--output-dir", help="Directorio de salida.")
        parser.add_argument("--data-dir", help="Directorio con los CSV del mercado.")
        parser.add_argument("-v", "--verbose", action="store_true", help="Mensajes informativos.")
        subparsers = parser.add_subparsers(dest="command")
        for tool in self._registry.tools():
            sub = subparsers.add_parser(tool.name, help=tool.description, description=tool.description)
            tool.add_arguments(sub)
            self._subparsers[tool.name] = sub
        return parser

    def parse(self, argv: Optional[List[str]] = None) -> argparse.Namespace:
        args = self._parser.parse_args(argv)
        if args.command is None and not args.replay:
            self._parser.error("falta el subcomando (o --replay con un manifiesto).")
        return args

    def resolve_config(self, args: argparse.Namespace, manifest: Optional[Mapping[str, Any]] = None) -> RunConfig:
        """
        Raises:
            ConfigError: Configuración o manifiesto inválidos.
            DependencyMissingError: Si el manifiesto indicado no existe.
        """
        if args.replay:
            config = config_from_manifest(manifest if manifest is not None else load_manifest(args.replay))
        else:
            config = load_config(args.config)
        return config.with_overrides(
            seed=args.seed,
            threads=args.threads,
            tau_grid=parse_tau_grid(args.tau_grid) if args.tau_grid else None,
            alpha=args.alpha,
            output_dir=args.output_dir,
            data_dir=args.data_dir,
        )

    def resolve_command(self, args: argparse.Namespace,
                        manifest: Optional[Mapping[str, Any]] = None) -> Tuple[str, Dict[str, Any]]:
        """
        Returns:
            Tuple[str, Dict[str, Any]]: Subcomando y opciones que recibirá la herramienta.

        Raises:
            ConfigError: Si el manifiesto no registra un subcomando conocido o contradice el pedido.
        """
        options = {key: value for key, value in vars(args).items() if key not in GLOBAL_KEYS}
        if manifest is None:
            return args.command, options

        recorded = manifest.get("command")
        if recorded not in self._subparsers:
            raise ConfigError(f"El manifiesto no registra un subcomando conocido: {recorded!r}.")
        if args.command and args.command != recorded:
            raise ConfigError(f"El manifiesto corresponde a '{recorded}', no a '{args.command}'.")
        replayed = dict(manifest.get("options") or {})
        sub = self._subparsers[recorded]
        replayed.update({key: value for key, value in options.items() if value != sub.get_default(key)})
        return recorded, replayed

    def dispatch(self, argv: Optional[List[str]] = None) -> Tuple[BaseTool, RunContext]:
        """
        Returns:
            Tuple[BaseTool, RunContext]: Herramienta elegida y su contexto listo para `execute`.
        """
        args = self.parse(argv)
        manifest = load_manifest(args.replay) if args.replay else None
        config = self.resolve_config(args, manifest)
        command, options = self.resolve_command(args, manifest)
        tool = self._registry.get_tool(command)
        context = RunContext(
            config=config,
            artifacts=ArtifactStore(config.output_dir, config, command=command),
            options=options,
        )
        logger.info("Plan de ejecución: subcomando='%s', config_hash=%s", tool.name, context.artifacts.config_hash)
        return tool, context

import argparse
import json
import logging
import os
import sys
from typing import List

from core.catalog import catalog_list
from core.config import ExperimentConfig, load_config
from core.errors import ConfigError, UnknownKindError
from composers.experiments import EXIT_PASS, EXIT_RUNTIME, EXIT_USAGE, ExperimentRunner, run

__version__ = "0.1.0"

PRESETS_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "presets")

# ==================== 日志配置 ====================

class ColoredFormatter(logging.Formatter):
    """彩色日志格式化器"""

    COLORS = {
        'DEBUG': '\033[36m',      # 青色
        'INFO': '\033[32m',       # 绿色
        'WARNING': '\033[33m',    # 黄色
        'ERROR': '\033[31m',      # 红色
        'CRITICAL': '\033[35m',   # 紫色
        'RESET': '\033[0m'
    }

    def format(self, record):
        levelname = record.levelname
        if levelname in self.COLORS:
            record.levelname = f"{self.COLORS[levelname]}{levelname}{self.COLORS['RESET']}"
        return super().format(record)

def setup_logging(verbose: int = 0, quiet: bool = False, log_file: str = None):
    """
    设置日志系统

    Args:
        verbose: 详细级别 (0=WARNING, 1=INFO, 2=DEBUG)
        quiet: 安静模式，只显示错误
        log_file: 日志文件路径（可选）
    """
    if quiet:
        level = logging.ERROR
    elif verbose == 0:
        level = logging.WARNING
    elif verbose == 1:
        level = logging.INFO
    else:
        level = logging.DEBUG

    if verbose >= 2:
        # DEBUG 模式：显示时间和函数信息
        fmt = '%(asctime)s [%(levelname)s] %(name)s.%(funcName)s(): %(message)s'
        datefmt = '%Y-%m-%d %H:%M:%S'
    elif verbose == 1:
        fmt = '[%(levelname)s] %(message)s'
        datefmt = None
    else:
        fmt = '%(levelname)s: %(message)s'
        datefmt = None

    # 日志走 stderr，stdout 留给 catalog/version 的输出
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(ColoredFormatter(fmt, datefmt))

    root_logger = logging.getLogger()
    root_logger.setLevel(level)
    root_logger.handlers = []
    root_logger.addHandler(console_handler)

    if log_file:
        try:
            file_handler = logging.FileHandler(log_file, mode='w', encoding='utf-8')
            file_handler.setFormatter(logging.Formatter(fmt, datefmt))
            root_logger.addHandler(file_handler)
        except OSError as e:
            print(f"警告：无法创建日志文件 {log_file}: {e}", file=sys.stderr)

    return logging.getLogger(__name__)

# ==================== 工具函数 ====================

def get_available_presets() -> List[str]:
    """获取可用的预设列表"""
    if not os.path.isdir(PRESETS_DIR):
        return []
    return sorted(f[:-5] for f in os.listdir(PRESETS_DIR) if f.endswith('.json'))

def resolve_config(args, logger: logging.Logger) -> ExperimentConfig:
    """--config 或 --preset 得到配置，再应用命令行覆盖项"""
    if args.preset:
        path = os.path.join(PRESETS_DIR, f"{args.preset}.json")
        if not os.path.exists(path):
            raise ConfigError("--preset", f"unknown preset '{args.preset}'; available: {get_available_presets()}")
    else:
        path = args.config
    logger.info(f"加载配置: {path}")
    config = load_config(path)
    return config.with_overrides(seed=args.seed, workers=args.workers)

def display_config(config: ExperimentConfig, logger: logging.Logger):
    logger.info("=" * 60)
    logger.info(f"实验 (Experiment): {config.experiment}")
    logger.info(f"问题 (Problem): {config.problem} {config.params}")
    logger.info(f"种子 (Seed): {config.seed}")
    logger.debug(f"配置详细内容:\n{json.dumps(config.to_dict(), indent=2, ensure_ascii=False)}")
    logger.info("=" * 60)

def cmd_run(args, logger: logging.Logger) -> int:
    try:
        config = resolve_config(args, logger)
    except (ConfigError, UnknownKindError) as e:
        logger.error(f"配置错误: {e}")
        return EXIT_USAGE
    display_config(config, logger)

    out_dir = args.out or config.output
    if not out_dir:
        logger.error("没有输出目录：使用 --out 或在配置中设置 output")
        return EXIT_USAGE

    try:
        status = run(config, out_dir)
    except (ConfigError, UnknownKindError) as e:
        logger.error(f"配置错误: {e}（部分结果已写入 {out_dir}，标记为 partial）")
        return EXIT_USAGE
    except Exception as e:
        logger.error(f"运行失败: {e}（部分结果已写入 {out_dir}，标记为 partial）", exc_info=args.verbose >= 2)
        return EXIT_RUNTIME

    verdict = "PASS" if status == EXIT_PASS else "CHECK FAILURE"
    logger.info(f"结果写入 {out_dir}: {verdict}")
    print(f"{config.experiment} on {config.problem}: {verdict} ({out_dir})")
    return status

def cmd_catalog(args, logger: logging.Logger) -> int:
    print(catalog_list())
    if args.verbose >= 1:
        print(f"\n实验类型: {', '.join(ExperimentRunner.get_available_strategies())}")
        print(f"预设: {', '.join(get_available_presets())}")
    return EXIT_PASS

def cmd_version(args, logger: logging.Logger) -> int:
    print(f"jumpfpe {__version__}")
    return EXIT_PASS

# ==================== 主函数 ====================

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=0,
                        help="增加输出详细程度 (-v=INFO, -vv=DEBUG)")
    common.add_argument("-q", "--quiet", action="store_true",
                        help="安静模式，仅显示错误信息")
    common.add_argument("--log-file", type=str, default=None,
                        help="将日志保存到指定文件")

    parser = argparse.ArgumentParser(
        description="Jump-diffusion SDE / non-local Fokker-Planck experiment CLI",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
示例:
  # 运行预设实验
  python main.py run --preset superpose_ou_jump --out runs/superpose -v

  # 运行自定义配置，覆盖种子与线程数
  python main.py run --config my.json --out runs/my --seed 7 --workers 4

  # 用复现片段重新运行
  python main.py run --config runs/superpose/repro.json --out runs/again

  # 列出内置问题
  python main.py catalog
        """
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", parents=[common], help="运行一个实验")
    source = p_run.add_mutually_exclusive_group(required=True)
    source.add_argument("--config", help="实验配置 JSON 文件")
    source.add_argument("--preset", help="presets/ 下的预设名称")
    p_run.add_argument("--out", default=None, help="输出目录")
    p_run.add_argument("--seed", type=int, default=None, help="覆盖配置中的主种子 (u64)")
    p_run.add_argument("--workers", type=int, default=None, help="覆盖模拟线程数")
    p_run.set_defaults(handler=cmd_run)

    p_cat = sub.add_parser("catalog", parents=[common], help="列出内置问题及其参数与假设")
    p_cat.set_defaults(handler=cmd_catalog)

    p_ver = sub.add_parser("version", parents=[common], help="显示版本")
    p_ver.set_defaults(handler=cmd_version)
    return parser

def main(argv: List[str] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_PASS

    logger = setup_logging(verbose=args.verbose, quiet=args.quiet, log_file=args.log_file)
    logger.debug(f"命令行参数: {vars(args)}")
    return args.handler(args, logger)

if __name__ == "__main__":
    sys.exit(main())

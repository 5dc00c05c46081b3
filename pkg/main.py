import argparse
import logging
import sys

from src.config import LOG_LEVEL


def run(args) -> int:
    from src.experiments import load_config, run_campaign, summarize

    config = load_config(args.config, profile=args.profile, seeds=args.seeds, output=args.out)
    rows = run_campaign(config, workers=args.workers)
    if rows:
        summarize(rows, config.output_dir, config.campaign.sweep)
    print(f"{len(rows)} rows in {config.output_dir}")
    return 0


def summarize_csv(args) -> int:
    from src.experiments import summarize

    summary = summarize(args.csv, args.out)
    print(summary.to_string(index=False))
    return 0


def complexity(args) -> int:
    from src.optimizer import complexity_estimate

    estimate = complexity_estimate(args.N, args.M, args.Jr, args.Jt)
    for name, value in estimate.as_dict().items():
        print(f"{name:>12}: {value:.6g}" if isinstance(value, float) else f"{name:>12}: {value}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Robust secrecy-energy-efficiency campaigns for STAR-RIS NOMA")
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('run', help="run a campaign from an INI config")
    p.add_argument('config')
    p.add_argument('--out', help="output directory")
    p.add_argument('--seeds', type=int, help="number of seeds")
    p.add_argument('--profile', choices=['desk', 'paper'])
    p.add_argument('--workers', type=int, help="worker processes (1 runs inline)")
    p.set_defaults(func=run)

    p = sub.add_parser('summarize', help="summarize a results.csv")
    p.add_argument('csv')
    p.add_argument('--out', help="output directory, defaults to the csv's directory")
    p.set_defaults(func=summarize_csv)

    p = sub.add_parser('complexity', help="LMI inventory and operation-count estimate")
    p.add_argument('N', type=int)
    p.add_argument('M', type=int)
    p.add_argument('Jr', type=int)
    p.add_argument('Jt', type=int)
    p.set_defaults(func=complexity)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=LOG_LEVEL, format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as e:
        logging.getLogger(__name__).error(str(e))
        return 2


if __name__ == "__main__":
    sys.exit(main())
